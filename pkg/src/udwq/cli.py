"""``udwq`` command line: run one experiment configuration and write CSV.

Every run writes ``<prefix>_<subcommand>.csv`` (plus a ``_summary.csv``
where a subcommand has scalar results) and ``<prefix>_<subcommand>.config.json``,
the resolved configuration that reproduces the run.

Exit codes: 0 success, 2 configuration error, 3 numerical-contract failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata

import numpy as np

from . import channel as ch
from . import config as cfgmod
from .errors import ConfigError, NumericalContractError
from .experiment import (
    POLE_INPUTS,
    bloch_states,
    build_scenario,
    channel_summary,
    input_independence,
    random_inputs,
)
from .fock_oracle import DiscreteModeModel, oracle_bilinears, simulate_protocol
from .protocol import Support, causal_classify

SUBCOMMANDS = ("bilinears", "channel", "sweep", "spacelike", "huygens", "oracle-check", "bob-solve")
ORACLE_TOL = 1e-6


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class Writer:
    def __init__(self, out_dir, cfg, subcommand, seed):
        self.out_dir = out_dir
        self.cfg = cfg
        self.sub = subcommand
        self.seed = seed
        self.stem = f"{cfg['output']['prefix']}_{subcommand.replace('-', '_')}"
        os.makedirs(out_dir, exist_ok=True)

    def _meta(self, extra=()):
        g = self.cfg["grid"]
        lines = [
            f"# udwq {_version()} {self.sub}",
            f"# config_sha256 {cfgmod.config_hash(self.cfg)}",
            f"# grid dimension={self.cfg['model']['dimension']} cutoff={fmt(g['cutoff'])} points={g['points']}",
            f"# seed {self.seed}",
        ]
        return lines + [f"# {k} {fmt(v)}" for k, v in extra]

    def table(self, header, rows, suffix="", extra=()):
        path = os.path.join(self.out_dir, self.stem + suffix + ".csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for line in self._meta(extra):
                fh.write(line + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        return path

    def summary(self, pairs):
        return self.table(["quantity", "value"], pairs, suffix="_summary")

    def echo(self):
        path = os.path.join(self.out_dir, self.stem + ".config.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def run_bilinears(cfg, w, **_):
    sc = build_scenario(cfg)
    Wm = sc.table.wightman()
    labels = sc.table.labels
    rows = [(labels[i], labels[j], sc.table.E[i, j], sc.table.H[i, j], Wm[i, j].real, Wm[i, j].imag)
            for i in range(4) for j in range(4)]
    w.table(["a", "b", "E", "H", "W_re", "W_im"], rows)
    w.summary([("lambda1", sc.lambda1), ("lambda2", sc.lambda2), ("c", sc.c),
               ("branch", -1 if sc.branch is None else sc.branch),
               ("e", sc.conditions.e), ("w1", sc.conditions.w1), ("w2", sc.conditions.w2), ("h", sc.conditions.h),
               ("margin", sc.margin)])


def run_channel(cfg, w, **_):
    sc = build_scenario(cfg)
    s = channel_summary(sc)
    rho = s["rho"].matrix
    rows = [("re", i, *rho[i].real) for i in range(4)] + [("im", i, *rho[i].imag) for i in range(4)]
    w.table(["block", "row", "c0", "c1", "c2", "c3"], rows)
    w.summary([("I_c", s["I_c"]), ("negativity", s["negativity"]), ("signaling", s["signaling"]),
               ("E12", s["E12"]), ("margin", s["margin"]), ("c", sc.c), ("lambda2", sc.lambda2)])


def _sweep_point(cfg, param, value):
    point = cfgmod.resolve(cfgmod.set_path(cfg, param, value))
    s = channel_summary(build_scenario(point))
    return (value, s["E12"], s["margin"], s["I_c"], s["negativity"], s["signaling"])


def run_sweep(cfg, w, threads=1, **_):
    if "sweep" not in cfg:
        raise ConfigError("the sweep subcommand needs a 'sweep' block")
    param, values = cfg["sweep"]["parameter"], cfg["sweep"]["values"]
    base = {k: v for k, v in cfg.items() if k != "sweep"}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda v: _sweep_point(base, param, v), values))
    w.table(["param", "E12", "margin", "I_c", "negativity", "signaling"], rows, extra=[("parameter", param)])


def _classification(sc):
    f1, _, g1, _ = sc.smearings
    first = lambda s: s[0] if isinstance(s, tuple) else s  # noqa: E731
    return causal_classify(sc.model, Support.of(first(f1)), Support.of(first(g1)))


def run_spacelike(cfg, w, seed=0, **_):
    sc = build_scenario(cfg)
    rng = np.random.default_rng(seed)
    inputs = random_inputs(rng, cfg["spacelike"]["inputs"])
    outs, worst, neg = input_independence(sc.table, inputs)
    first = outs[0].bob_marginal()
    product_dev = max(
        float(np.max(np.abs(ch.spacelike_rho_EB(ch.ProtocolSpec(sc.table, r)).matrix - o.matrix)))
        for r, o in zip(inputs, outs))
    rows = [(i, ch.trace_distance(o.bob_marginal(), first), ch.negativity(o)) for i, o in enumerate(outs)]
    w.table(["input", "trace_distance_to_first", "negativity"], rows)
    channel = ch.make_channel(sc.table)
    cls = _classification(sc)
    w.summary([
        ("classification", cls.kind.value), ("interval_margin", cls.margin),
        ("max_cross_E", sc.table.cross_causal_max()),
        ("max_pairwise_trace_distance", worst), ("max_negativity", neg),
        ("product_form_deviation", product_dev),
        ("I_c", ch.channel_coherent_information(channel)),
        ("signaling", ch.classical_signaling(channel, bloch_states(POLE_INPUTS))),
    ])


def run_huygens(cfg, w, seed=0, **_):
    sc = build_scenario(cfg)
    cls = _classification(sc)
    E = sc.table.E
    scale = abs(E[0, 1])
    rows = [(a, b, E[i, j], abs(E[i, j]) / scale if scale else float("nan"))
            for i, a in ((0, "f1"), (1, "f2")) for j, b in ((2, "g1"), (3, "g2"))]
    w.table(["f", "g", "E", "ratio_to_E12"], rows)
    inputs = random_inputs(np.random.default_rng(seed), cfg["spacelike"]["inputs"])
    _, worst, _ = input_independence(sc.table, inputs)
    w.summary([("classification", cls.kind.value), ("interval_margin", cls.margin),
               ("max_cross_ratio", max(r[3] for r in rows)), ("max_pairwise_trace_distance", worst)])


def run_oracle_check(cfg, w, seed=0, **_):
    o = cfg["oracle"]
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(o["models"]):
        model = DiscreteModeModel.random(rng, modes=int(rng.integers(1, o["max_modes"] + 1)))
        table = oracle_bilinears(model)
        rho_f = simulate_protocol(model, N=o["truncation"])
        rho_w = ch.assemble_rho_EB(ch.ProtocolSpec(table))
        d = ch.trace_distance(rho_f, rho_w)
        rows.append((i, model.modes, d, d <= ORACLE_TOL))
    w.table(["model", "modes", "trace_distance", "pass"], rows)
    bad = [r[0] for r in rows if not r[3]]
    if bad:
        raise NumericalContractError(f"Fock and Weyl pipelines disagree on models {bad}",
                                     invariant="pipeline equivalence")


def run_bob_solve(cfg, w, **_):
    if "solve" not in cfg["bob"]:
        raise ConfigError("bob-solve needs bob.solve")
    sc = build_scenario(cfg)
    g1, g2 = sc.extra["bob_profiles"]
    nodes = g1[0].profile.nodes
    cols = [g1[0], g1[1], g2[0], g2[1]]
    if nodes.ndim == 1:
        header, knodes = ["k"], nodes[:, None]
    else:
        header, knodes = [f"k{i}" for i in range(nodes.shape[1])], nodes
    header += [f"{n}_{p}" for n in ("g1_delta", "g1_delta_prime", "g2_delta", "g2_delta_prime") for p in ("re", "im")]
    rows = []
    for idx in range(nodes.shape[0]):
        vals = []
        for s in cols:
            v = s.profile.values[idx]
            vals += [v.real, v.imag]
        rows.append((*knodes[idx], *vals))
    w.table(header, rows)
    ideal = cfgmod.resolve(dict({k: v for k, v in cfg.items() if k != "bob"}, bob={"ideal": {}}))
    ref = build_scenario(ideal).table
    w.summary([("max_E_deviation", float(np.max(np.abs(sc.table.E - ref.E)))),
               ("max_H_deviation", float(np.max(np.abs(sc.table.H - ref.H))))])


RUNNERS = {
    "bilinears": run_bilinears,
    "channel": run_channel,
    "sweep": run_sweep,
    "spacelike": run_spacelike,
    "huygens": run_huygens,
    "oracle-check": run_oracle_check,
    "bob-solve": run_bob_solve,
}


def _threads(arg):
    raw = arg if arg is not None else os.environ.get("UDWQ_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"thread count must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="udwq", description="Delta-coupled detector channel experiments.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--threads", default=None, help="worker threads for sweeps (env UDWQ_THREADS)")
    p.add_argument("--seed", type=int, default=None, help="seed for random inputs and oracle models")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        threads = _threads(args.threads)
        cfg = cfgmod.load(args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
        cfg["seed"] = seed
        w = Writer(args.out, cfg, args.subcommand, seed)
        RUNNERS[args.subcommand](cfg, w, threads=threads, seed=seed)
        w.echo()
    except ConfigError as exc:
        print(f"udwq: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalContractError as exc:
        print(f"udwq: numerical contract violated [{exc.invariant}]: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
