"""Replays exported path conditions under z3 and compares against the builtin
solver. Exits 77 (skipped) when z3 is not importable."""

import pathlib
import subprocess
import sys
import tempfile

try:
    import z3
except ImportError:
    print("z3 not available; skipping")
    sys.exit(77)

QUERIES = 1000
SEED = 20240611
Z3_TIMEOUT_MS = 5000


def main() -> int:
    corpus = sys.argv[1]
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([corpus, tmp, str(QUERIES), str(SEED)], check=True)
        counts = {"agree": 0, "builtin-unknown": 0, "z3-unknown": 0}
        bad = []
        for path in sorted(pathlib.Path(tmp).glob("q*.smt2"), key=lambda p: int(p.stem[1:])):
            text = path.read_text()
            builtin = text.splitlines()[0].split(":", 1)[1].strip()
            s = z3.Solver()
            s.set("timeout", Z3_TIMEOUT_MS)
            s.from_string(text)
            got = str(s.check())
            if builtin == "unknown":
                counts["builtin-unknown"] += 1
            elif got == "unknown":
                counts["z3-unknown"] += 1
            elif got == builtin:
                counts["agree"] += 1
            else:
                bad.append((path.name, builtin, got, text.splitlines()[1]))
        # the hand-written head of the corpus has fixed expected verdicts
        expected = {0: "sat", 1: "unsat", 2: "sat", 3: "unsat", 4: "sat", 5: "unsat"}
        for i, want in expected.items():
            s = z3.Solver()
            s.from_file(str(pathlib.Path(tmp) / f"q{i}.smt2"))
            got = str(s.check())
            if got != want:
                bad.append((f"q{i}.smt2", want, got, "fixed example"))
    print(counts)
    for b in bad:
        print("MISMATCH %s builtin=%s z3=%s %s" % b)
    if counts["agree"] < QUERIES // 2:
        print("too few decided queries to be meaningful")
        return 1
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
