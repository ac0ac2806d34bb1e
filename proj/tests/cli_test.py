"""End-to-end checks of the polyheap CLI: exit codes, report schema, and
byte-identical output for a fixed seed."""

import json
import os
import subprocess
import sys
import tempfile

import jsonschema

CLI, SCHEMA, FIX = sys.argv[1], sys.argv[2], sys.argv[3]
with open(SCHEMA) as f:
    VALIDATOR = jsonschema.Draft202012Validator(json.load(f))

failures = []


def fx(name):
    return os.path.join(FIX, name)


def call(*args, env=None):
    e = dict(os.environ)
    e.pop("POLYHEAP_SEED", None)
    if env:
        e.update(env)
    p = subprocess.run([CLI, *args], capture_output=True, text=True, env=e, timeout=600)
    return p.returncode, p.stdout, p.stderr


def check(name, args, code, env=None, expect=None, schema=True):
    rc, out, err = call(*args, env=env)
    ok = rc == code
    msg = ""
    rep = None
    if schema and ok:
        try:
            rep = json.loads(out)
            errs = sorted(VALIDATOR.iter_errors(rep), key=str)
            if errs:
                ok, msg = False, "schema: " + errs[0].message
        except json.JSONDecodeError as ex:
            ok, msg = False, "bad json: %s" % ex
    if ok and expect and rep is not None:
        why = expect(rep)
        if why:
            ok, msg = False, why
    print("%s %s (exit %d, want %d) %s" % ("PASS" if ok else "FAIL", name, rc, code, msg))
    if not ok:
        failures.append(name)
        sys.stdout.write(out[-2000:] + err[-2000:])
    return rep


def results_are(want):
    def f(rep):
        got = [(r["outcome"], r["value"]) for r in rep["results"]]
        return None if got == want else "results %s" % got
    return f


with tempfile.TemporaryDirectory() as tmp:
    ident = os.path.join(tmp, "ident.ph")
    with open(ident, "w") as f:
        f.write("func f(x) { skip; return x }\n")
    broken = os.path.join(tmp, "broken.ph")
    with open(broken, "w") as f:
        f.write("func f(x { skip }\n")
    unknown = os.path.join(tmp, "unknown.ph")
    with open(unknown, "w") as f:
        f.write("func f(x) { skip; return x }\nspec SL g(x) { requires: emp; ensures_ok: emp }\n")

    # run
    check("run ok", ["run", ident, "f", "7"], 0, expect=results_are([("ok", "7")]))
    check("run miss", ["run", fx("run_missing.ph"), "f", "0"], 3,
          expect=results_are([("miss", '["MissingCell", 1]')]))
    check("run malformed", ["run", broken, "f", "7"], 2,
          expect=lambda r: None if r["error"]["kind"] == "ParseError" else "kind")
    check("run unknown function", ["run", ident, "g"], 2)
    check("run unknown model", ["run", ident, "f", "7", "--model", "nope"], 2)
    check("run bad flag", ["run", ident, "f", "--mode", "zz"], 2, schema=False)
    check("run other model", ["run", ident, "f", "7", "--model", "block-offset"], 0)
    rc, out, _ = call("run", ident, "f", "7", "--format", "human")
    if rc != 0 or not out.startswith("ok 7"):
        failures.append("run human")
        print("FAIL run human: %r" % out)
    else:
        print("PASS run human")

    # verify
    check("verify linear", ["verify", fx("verify_linear.ph")], 0)
    check("verify sample", ["verify", fx("sample.ph")], 0)
    check("verify frac", ["verify", fx("verify_frac.ph"), "--model", "frac"], 0)
    check("verify block", ["verify", fx("verify_block.ph"), "--model", "block-offset"], 0)
    check("verify objects", ["verify", fx("verify_objects.ph"), "--model", "objects"], 0)

    def has_trace(rep):
        failed = [s for s in rep["specs"] if s["verdict"] == "Failed"]
        if not failed or not failed[0]["failing"] or not failed[0]["failing"][0]["trace"]:
            return "no failing trace"
        return None

    check("verify wrong post", ["verify", fx("wrong_post.ph")], 1, expect=has_trace)
    check("verify unknown function", ["verify", unknown], 2)
    check("verify malformed", ["verify", broken], 2)
    check("verify with dumps", ["verify", fx("verify_linear.ph"), "--solver", "smtlib-dump",
                                "--smtlib-out", os.path.join(tmp, "dumps")], 0)
    if not any(n.endswith(".smt2") for n in os.listdir(os.path.join(tmp, "dumps"))):
        failures.append("smtlib dumps")
        print("FAIL smtlib dumps written")
    else:
        print("PASS smtlib dumps written")

    # find-bugs
    check("find-bugs uaf", ["find-bugs", fx("uaf.ph")], 3,
          expect=lambda r: None if len(r["bugs"]) == 1 else "bugs %d" % len(r["bugs"]))
    check("find-bugs skip", ["find-bugs", fx("skip.ph")], 0,
          expect=lambda r: None if not r["bugs"] else "bugs")
    check("find-bugs missing cell", ["find-bugs", fx("missing_cell.ph")], 0)
    check("find-bugs chunks", ["find-bugs", fx("uaf.ph"), "--model", "chunks"], 5,
          expect=lambda r: None if r["error"]["kind"] == "UnsupportedCapability" else "kind")

    # check-model
    check("check-model linear", ["check-model", "linear", "--seed", "3"], 0)

    def ox_refuted(rep):
        ox = [c for c in rep["checks"] if c["mode"] == "ox"]
        return None if any(c["verdict"] == "refuted" for c in ox) else "no OX refutation"

    check("check-model linear-cut", ["check-model", "linear-cut", "--seed", "3"], 0, expect=ox_refuted)
    check("check-model sabotage", ["check-model", "linear", "--sabotage", "--seed", "3"], 1)
    check("check-model cheri", ["check-model", "cheri"], 2,
          expect=lambda r: None if r["error"]["kind"] == "NotImplemented" else "kind")
    check("check-model unknown", ["check-model", "nope"], 2)

    # determinism
    a = call("check-model", "frac", "--seed", "9", "--trials", "200")
    b = call("check-model", "frac", "--seed", "9", "--trials", "200")
    c = call("check-model", "frac", "--trials", "200", env={"POLYHEAP_SEED": "9"})
    if a[0] == 0 and a[1] == b[1] == c[1]:
        print("PASS deterministic output for a fixed seed")
    else:
        failures.append("determinism")
        print("FAIL deterministic output for a fixed seed")
    rep = json.loads(a[1])
    if rep["seed"] != 9:
        failures.append("seed echo")
        print("FAIL seed echoed in report")

print("%d failure(s)" % len(failures))
sys.exit(1 if failures else 0)
