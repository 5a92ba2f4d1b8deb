"""Turn a resolved configuration into smearings, tables and channel outputs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .errors import ConfigError
from .field_backend import (
    CompactBump,
    Delta,
    DeltaPrime,
    Gaussian,
    KGrid,
    SmearingSpec,
    SpacetimeModel,
    build_bilinear_table,
    mode_amplitude,
)
from .protocol import (
    ProtocolConditions,
    bob_smearing_solve,
    choose_branch,
    solve_fine_tuning,
    strong_coupling_margin,
    truncate_coverage,
)

POLE_INPUTS = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]


def build_model(cfg):
    m = cfg["model"]
    return SpacetimeModel(spatial_dimension=m["dimension"], mass=m["mass"])


def build_grid(cfg):
    g, n = cfg["grid"], cfg["model"]["dimension"]
    if n == 3:
        return KGrid.radial_grid(g["cutoff"], g["points"])
    return KGrid.tensor(n, g["cutoff"], g["points"])


def build_profile(p):
    if p["type"] == "gaussian":
        return Gaussian(tuple(p["center"]), p["width"])
    return CompactBump(tuple(p["center"]), p["radius"])


def _term(t, default_coupling):
    temporal = Delta(t["time"]) if t["kind"] == "delta" else DeltaPrime(t["time"])
    return SmearingSpec(t.get("coupling", default_coupling), temporal, build_profile(t["profile"]))


@dataclass
class Scenario:
    """Everything derived from one configuration."""

    model: SpacetimeModel
    grid: KGrid
    smearings: list
    table: object
    conditions: ProtocolConditions
    lambda1: float
    lambda2: float
    c: float
    branch: int = None
    extra: dict = field(default_factory=dict)

    @property
    def margin(self):
        return strong_coupling_margin(self.table)

    @property
    def E12(self):
        return float(self.table.E[0, 1])


def build_scenario(cfg):
    model = build_model(cfg)
    grid = build_grid(cfg)
    a = cfg["alice"]
    profile = build_profile(a["profile"])
    f1_hat = SmearingSpec(1.0, Delta(a["time"]), profile)
    f2_hat = SmearingSpec(1.0, DeltaPrime(a["time"]), profile)
    cond = ProtocolConditions.from_smearings(model, f1_hat, f2_hat, grid)
    branch = None
    if "couplings" in a:
        lam1, lam2 = a["couplings"]["lambda1"], a["couplings"]["lambda2"]
        c = lam1 / lam2 if lam2 != 0 else math.inf
    else:
        s = a["solve"]
        if "lambda2" in s:
            lam2 = s["lambda2"]
        else:
            if cond.w2 <= 0:
                raise ConfigError("w2 vanishes; cannot set lambda2 from lambda2sq_w2")
            lam2 = math.sqrt(s["lambda2sq_w2"] / cond.w2)
        if "branch" in s:
            branch = s["branch"]
            c = solve_fine_tuning(cond, lam2, branch)
        else:
            branch, c, _ = choose_branch(cond, lam2, s["margin_threshold"])
        lam1 = c * lam2
    f1, f2 = f1_hat.with_coupling(lam1), f2_hat.with_coupling(lam2)

    extra = {}
    mode, b = next(iter(cfg["bob"].items()))
    if mode == "ideal":
        g1, g2 = f1, f2
    elif mode == "solve":
        if b["time"] <= a["time"]:
            raise ConfigError("bob.solve.time must be later than alice.time")
        amps = mode_amplitude(model, f1, grid), mode_amplitude(model, f2, grid)
        g1, g2 = bob_smearing_solve(model, amps[0], amps[1], b["time"])
        if b["coverage"] < 1:
            if not grid.radial:
                raise ConfigError("partial coverage is implemented for radial (3+1) grids only")
            shell = b["time"] - a["time"]
            r_max = shell + 12 * (a["profile"].get("width") or a["profile"].get("radius"))
            g1, g2 = tuple(
                tuple(SmearingSpec(s.coupling, s.temporal, truncate_coverage(s.profile, b["coverage"], shell, r_max))
                      for s in g)
                for g in (g1, g2))
        extra["bob_profiles"] = (g1, g2)
    elif mode == "spacelike_offset":
        shifted = dict(a["profile"], center=[x + d for x, d in zip(a["profile"]["center"], b["offset"])])
        prof = build_profile(shifted)
        g1 = SmearingSpec(lam1, Delta(b["time"]), prof)
        g2 = SmearingSpec(lam2, DeltaPrime(b["time"]), prof)
    else:
        g1 = tuple(_term(t, lam1) for t in b["g1"])
        g2 = tuple(_term(t, lam2) for t in b["g2"])
    smearings = [f1, f2, g1, g2]
    table = build_bilinear_table(model, smearings, grid)
    return Scenario(model, grid, smearings, table, cond, lam1, lam2, c, branch, extra)


def bloch_states(vectors):
    return [ch.QubitState.from_bloch(v) for v in vectors]


def channel_summary(scenario):
    """Bell-input ``rho_EB`` plus I_c, negativity and signaling for one scenario."""
    channel = ch.make_channel(scenario.table)
    rho = channel(ch.BELL_EA)
    return {
        "rho": rho,
        "I_c": ch.channel_coherent_information(channel),
        "negativity": ch.negativity(rho),
        "signaling": ch.classical_signaling(channel, bloch_states(POLE_INPUTS)),
        "E12": scenario.E12,
        "margin": scenario.margin,
    }


def random_inputs(rng, count):
    """Random ``E (x) A`` inputs: purifications of random mixed states and random pure two-qubit states."""
    out = []
    for i in range(count):
        if i % 2 == 0:
            v = rng.normal(size=3)
            v = v / np.linalg.norm(v) * rng.uniform(0, 1) ** (1 / 3)
            out.append(ch.purify(ch.QubitState.from_bloch(v)))
        else:
            psi = rng.normal(size=4) + 1j * rng.normal(size=4)
            psi /= np.linalg.norm(psi)
            out.append(np.outer(psi, psi.conj()))
    return out


def input_independence(table, inputs):
    """Max pairwise trace distance of Bob's outputs and the largest ``E:B`` negativity.

    The channel output is Bob's marginal; the environment marginal of
    ``rho_EB`` tracks the input by construction and is not compared.
    """
    channel = ch.make_channel(table)
    outs = [channel(r) for r in inputs]
    worst = 0.0
    for i in range(len(outs)):
        for j in range(i + 1, len(outs)):
            worst = max(worst, ch.trace_distance(outs[i].bob_marginal(), outs[j].bob_marginal()))
    return outs, worst, max(ch.negativity(o) for o in outs)
