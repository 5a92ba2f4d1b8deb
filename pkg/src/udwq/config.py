"""Experiment configuration: JSON parsing, validation and defaults.

A configuration is one JSON object::

    {
      "model": {"dimension": 3, "mass": 0.0},
      "grid": {"cutoff": 12.0, "points": 256},
      "alice": {
        "time": 0.0,
        "profile": {"type": "gaussian", "center": [0, 0, 0], "width": 1.0},
        "solve": {"lambda2sq_w2": 0.01, "margin_threshold": 100}
      },
      "bob": {"solve": {"time": 2.0}},
      "sweep": {"parameter": "alice.solve.lambda2sq_w2", "values": [0.1, 0.01]},
      "output": {"prefix": "run"}
    }

``alice`` takes either ``couplings`` (``lambda1``, ``lambda2``) or ``solve``
(one of ``lambda2`` / ``lambda2sq_w2``, optional ``branch`` and
``margin_threshold``).  ``bob`` takes exactly one of ``ideal`` (``g_i = f_i``),
``solve`` (``time``, optional ``coverage``), ``spacelike_offset``
(``offset`` vector, ``time``) or ``explicit`` (``g1``/``g2`` lists of
smearing terms).  A sweep ``parameter`` is a dotted path to a numeric field.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re

from .errors import ConfigError

PROFILE_TYPES = ("gaussian", "bump")
BOB_MODES = ("ideal", "solve", "spacelike_offset", "explicit")


def line_of(text, path):
    """1-based line of the last key in ``path`` (best effort; ``None`` if absent)."""
    if text is None:
        return None
    pos = 0
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            return None
        pos = m.start()
    return text.count("\n", 0, pos) + 1


class _Checker:
    def __init__(self, text):
        self.text = text

    def fail(self, path, msg):
        where = ".".join(str(p) for p in path)
        raise ConfigError(f"{where}: {msg}" if where else msg, line=line_of(self.text, path))

    def obj(self, d, path, allowed=None, required=()):
        if not isinstance(d, dict):
            self.fail(path, "expected an object")
        for k in required:
            if k not in d:
                self.fail(path, f"missing key {k!r}")
        if allowed is not None:
            for k in d:
                if k not in allowed:
                    self.fail(path + [k], f"unknown key (allowed: {', '.join(allowed)})")
        return d

    def num(self, d, key, path, default=None, lo=None, strict_lo=False, integer=False):
        if key not in d:
            if default is None:
                self.fail(path, f"missing key {key!r}")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path + [key], f"expected a number, got {v!r}")
        if integer and int(v) != v:
            self.fail(path + [key], f"expected an integer, got {v!r}")
        if v != v or v in (float("inf"), float("-inf")):
            self.fail(path + [key], "must be finite")
        if lo is not None and (v <= lo if strict_lo else v < lo):
            self.fail(path + [key], f"must be {'>' if strict_lo else '>='} {lo}, got {v}")
        return int(v) if integer else float(v)

    def vec(self, d, key, path, n, default=None):
        if key not in d:
            if default is None:
                self.fail(path, f"missing key {key!r}")
            return list(default)
        v = d[key]
        if not isinstance(v, list) or len(v) != n or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            self.fail(path + [key], f"expected a list of {n} numbers")
        return [float(x) for x in v]


def _profile(ck, d, path, n):
    ck.obj(d, path, allowed=("type", "center", "width", "radius"), required=("type",))
    kind = d["type"]
    if kind not in PROFILE_TYPES:
        ck.fail(path + ["type"], f"unknown profile type {kind!r} (allowed: {', '.join(PROFILE_TYPES)})")
    out = {"type": kind, "center": ck.vec(d, "center", path, n, default=[0.0] * n)}
    if kind == "gaussian":
        out["width"] = ck.num(d, "width", path, default=1.0, lo=0, strict_lo=True)
    else:
        out["radius"] = ck.num(d, "radius", path, default=1.0, lo=0, strict_lo=True)
    return out


def _term(ck, d, path, n):
    ck.obj(d, path, allowed=("kind", "time", "coupling", "profile"), required=("kind", "profile"))
    if d["kind"] not in ("delta", "delta_prime"):
        ck.fail(path + ["kind"], f"kind must be 'delta' or 'delta_prime', got {d['kind']!r}")
    out = {"kind": d["kind"], "time": ck.num(d, "time", path, default=0.0),
           "profile": _profile(ck, d["profile"], path + ["profile"], n)}
    if "coupling" in d:
        out["coupling"] = ck.num(d, "coupling", path)
    return out


def resolve(raw, text=None):
    """Validate ``raw`` (a parsed JSON object) and fill defaults.

    Raises:
        ConfigError: with the offending line when ``text`` is given.
    """
    ck = _Checker(text)
    ck.obj(raw, [], allowed=("model", "grid", "alice", "bob", "sweep", "output", "oracle", "spacelike", "seed"),
           required=("model", "alice"))
    model = ck.obj(raw["model"], ["model"], allowed=("dimension", "mass"))
    n = ck.num(model, "dimension", ["model"], default=3, lo=1, integer=True)
    mass = ck.num(model, "mass", ["model"], default=0.0, lo=0)
    if n == 1 and mass == 0:
        ck.fail(["model", "mass"], "massless 1+1 field is IR divergent; use mass > 0")
    out = {"model": {"dimension": n, "mass": mass}}

    alice = ck.obj(raw["alice"], ["alice"], allowed=("time", "profile", "couplings", "solve"))
    prof = _profile(ck, alice.get("profile", {"type": "gaussian"}), ["alice", "profile"], n)
    a = {"time": ck.num(alice, "time", ["alice"], default=0.0), "profile": prof}
    if ("couplings" in alice) == ("solve" in alice):
        ck.fail(["alice"], "give exactly one of 'couplings' or 'solve'")
    if "couplings" in alice:
        c = ck.obj(alice["couplings"], ["alice", "couplings"], allowed=("lambda1", "lambda2"),
                   required=("lambda1", "lambda2"))
        a["couplings"] = {"lambda1": ck.num(c, "lambda1", ["alice", "couplings"]),
                          "lambda2": ck.num(c, "lambda2", ["alice", "couplings"])}
    else:
        s = ck.obj(alice["solve"], ["alice", "solve"],
                   allowed=("lambda2", "lambda2sq_w2", "branch", "margin_threshold"))
        if ("lambda2" in s) == ("lambda2sq_w2" in s):
            ck.fail(["alice", "solve"], "give exactly one of 'lambda2' or 'lambda2sq_w2'")
        key = "lambda2" if "lambda2" in s else "lambda2sq_w2"
        solve = {key: ck.num(s, key, ["alice", "solve"], lo=0, strict_lo=True),
                 "margin_threshold": ck.num(s, "margin_threshold", ["alice", "solve"], default=100.0, lo=0)}
        if "branch" in s and s["branch"] is not None:
            solve["branch"] = ck.num(s, "branch", ["alice", "solve"], lo=0, integer=True)
        a["solve"] = solve
    out["alice"] = a

    width = prof.get("width", prof.get("radius"))
    grid = ck.obj(raw.get("grid", {}), ["grid"], allowed=("cutoff", "points"))
    default_points = {1: 512, 3: 256}.get(n, 48)
    out["grid"] = {"cutoff": ck.num(grid, "cutoff", ["grid"], default=12.0 / width, lo=0, strict_lo=True),
                   "points": ck.num(grid, "points", ["grid"], default=default_points, lo=16, integer=True)}

    bob = ck.obj(raw.get("bob", {"ideal": {}}), ["bob"], allowed=BOB_MODES)
    modes = [k for k in BOB_MODES if k in bob]
    if len(modes) != 1:
        ck.fail(["bob"], f"select exactly one Bob mode (one of {', '.join(BOB_MODES)})")
    mode = modes[0]
    body = ck.obj(bob[mode], ["bob", mode])
    if mode == "ideal":
        ck.obj(body, ["bob", mode], allowed=())
        b = {}
    elif mode == "solve":
        ck.obj(body, ["bob", mode], allowed=("time", "coverage"), required=("time",))
        b = {"time": ck.num(body, "time", ["bob", mode]),
             "coverage": ck.num(body, "coverage", ["bob", mode], default=1.0, lo=0)}
        if b["coverage"] > 1:
            ck.fail(["bob", mode, "coverage"], "coverage must lie in [0, 1]")
    elif mode == "spacelike_offset":
        ck.obj(body, ["bob", mode], allowed=("offset", "time"), required=("offset",))
        b = {"offset": ck.vec(body, "offset", ["bob", mode], n), "time": ck.num(body, "time", ["bob", mode], default=a["time"])}
    else:
        ck.obj(body, ["bob", mode], allowed=("g1", "g2"), required=("g1", "g2"))
        b = {}
        for key in ("g1", "g2"):
            terms = body[key]
            if not isinstance(terms, list) or not terms:
                ck.fail(["bob", mode, key], "expected a non-empty list of smearing terms")
            b[key] = [_term(ck, t, ["bob", mode, key, i], n) for i, t in enumerate(terms)]
    out["bob"] = {mode: b}

    if "sweep" in raw:
        sw = ck.obj(raw["sweep"], ["sweep"], allowed=("parameter", "values"), required=("parameter", "values"))
        vals = sw["values"]
        if not isinstance(vals, list) or not vals:
            ck.fail(["sweep", "values"], "sweep values must be a non-empty list")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            ck.fail(["sweep", "values"], "sweep values must be numbers")
        param = sw["parameter"]
        if not isinstance(param, str):
            ck.fail(["sweep", "parameter"], "parameter must be a dotted path string")
        target = get_path(out, param)
        if isinstance(target, bool) or not isinstance(target, (int, float)):
            ck.fail(["sweep", "parameter"], f"{param!r} does not name a numeric field of the resolved config")
        out["sweep"] = {"parameter": param, "values": [float(v) for v in vals]}

    oracle = ck.obj(raw.get("oracle", {}), ["oracle"], allowed=("models", "truncation", "max_modes"))
    out["oracle"] = {"models": ck.num(oracle, "models", ["oracle"], default=20, lo=1, integer=True),
                     "truncation": ck.num(oracle, "truncation", ["oracle"], default=60, lo=4, integer=True),
                     "max_modes": ck.num(oracle, "max_modes", ["oracle"], default=2, lo=1, integer=True)}
    if out["oracle"]["max_modes"] > 4:
        ck.fail(["oracle", "max_modes"], "at most 4 modes")
    sp = ck.obj(raw.get("spacelike", {}), ["spacelike"], allowed=("inputs",))
    out["spacelike"] = {"inputs": ck.num(sp, "inputs", ["spacelike"], default=10, lo=2, integer=True)}
    output = ck.obj(raw.get("output", {}), ["output"], allowed=("prefix",))
    prefix = output.get("prefix", "udwq")
    if not isinstance(prefix, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", prefix):
        ck.fail(["output", "prefix"], "prefix must be a plain file-name stem")
    out["output"] = {"prefix": prefix}
    out["seed"] = ck.num(raw, "seed", [], default=0, lo=0, integer=True) if "seed" in raw else 0
    return out


def get_path(cfg, dotted):
    node = cfg
    for part in dotted.split("."):
        if isinstance(node, dict) and part in node:
            node = node[part]
        elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        else:
            return None
    return node


def set_path(cfg, dotted, value):
    """Copy of ``cfg`` with the numeric field at ``dotted`` replaced."""
    out = copy.deepcopy(cfg)
    parts = dotted.split(".")
    node = out
    for part in parts[:-1]:
        node = node[int(part)] if isinstance(node, list) else node[part]
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out


def load(path):
    """Read, parse and resolve a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    return resolve(raw, text)


def canonical(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()
