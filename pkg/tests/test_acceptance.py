"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Three criteria are expected to fail with the numbers shown; see
``docs/printed_entry_audit.md`` and the README for the analysis.
"""

import time
from pathlib import Path

import numpy as np

from conftest import ideal_table, random_table, spacelike_table
from udwq import channel as ch
from udwq import config as cfgmod
from udwq.experiment import build_scenario, input_independence, random_inputs
from udwq.field_backend import (
    Delta,
    DeltaPrime,
    Gaussian,
    SmearingSpec,
    SpacetimeModel,
    build_bilinear_table,
    default_grid,
    mode_amplitude,
    refinement_change,
)
from udwq.fock_oracle import DiscreteModeModel, oracle_bilinears, simulate_protocol
from udwq.protocol import ProtocolConditions, bob_smearing_solve, choose_branch, solve_fine_tuning
from udwq.weyl import F1, F2, SIGN_PATTERNS, omega_O_closed_form, protocol_words, quasifree_expectation_many

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# frozen oracle values (extended-precision entropy of the fine-tuned matrix)
IC_ORACLE = {
    0.1: 0.47078080886484016742,
    0.05: 0.67638648552067929811,
    0.01: 0.90996546022583148442,
    0.001: 0.98760320001884711798,
}
# massless 3+1, unit Gaussian, unit couplings
E_PAIR = -1 / (8 * np.pi**1.5)
W_PAIR = 1 / (8 * np.pi**2)

M31 = SpacetimeModel()
G31 = default_grid(M31)
GAUSS = Gaussian((0, 0, 0), 1.0)
COND = ProtocolConditions(e=E_PAIR, w1=W_PAIR, w2=W_PAIR, h=0.0)


def report(capsys, number, name, ok, detail, elapsed, limit):
    ok = ok and elapsed <= limit
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {name}: {detail} ({elapsed:.2f}s of {limit:g}s)")
    return ok


def fine_tuned_table(l2w2):
    lam2 = np.sqrt(l2w2 / W_PAIR)
    _, _, table = choose_branch(COND, lam2)
    return table


def test_criterion_1_weyl_closed_form(capsys):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    words = protocol_words()
    worst = 0.0
    for _ in range(100):
        t = random_table(rng, scale=rng.uniform(0.1, 2.0))
        batch = quasifree_expectation_many(words, t)
        closed = np.array([omega_O_closed_form(s[:4], s[4:], t) for s in SIGN_PATTERNS])
        worst = max(worst, float(np.max(np.abs(closed - batch))))
    dt = time.perf_counter() - t0
    ok = report(capsys, 1, "Weyl reduction vs closed form", worst <= 1e-12, f"max deviation {worst:.2e}", dt, 5)
    assert ok


def test_criterion_2_fock_oracle(capsys):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(20):
        model = DiscreteModeModel.random(rng, modes=1 + i % 2, max_entry=2.0)
        d = ch.trace_distance(simulate_protocol(model, N=60), ch.assemble_rho_EB(ch.ProtocolSpec(oracle_bilinears(model))))
        worst = max(worst, d)
    dt = time.perf_counter() - t0
    ok = report(capsys, 2, "Fock oracle equivalence", worst <= 1e-6, f"max trace distance {worst:.2e}", dt, 120)
    assert ok


def test_criterion_3_perfect_channel_limit(capsys):
    t0 = time.perf_counter()
    ics, negs = {}, {}
    for l2w2 in IC_ORACLE:
        chan = ch.make_channel(fine_tuned_table(l2w2))
        ics[l2w2] = ch.channel_coherent_information(chan)
        negs[l2w2] = ch.negativity(chan(ch.BELL_EA))
    dt = time.perf_counter() - t0
    neg_ok = abs(negs[0.001] - 0.5 * np.exp(-0.002)) <= 1e-10
    ic_ok = ics[0.001] >= 0.99
    order = [ics[k] for k in (0.1, 0.05, 0.01, 0.001)]
    mono = all(a < b for a, b in zip(order, order[1:]))
    oracle_ok = all(abs(ics[k] - v) <= 1e-10 for k, v in IC_ORACLE.items())
    detail = (f"negativity {negs[0.001]:.12f} ({'ok' if neg_ok else 'off'}), I_c {ics[0.001]:.10f} vs >= 0.99, "
              f"monotone {mono}, I_c matches entropy oracle {oracle_ok}")
    ok = report(capsys, 3, "perfect-channel limit", neg_ok and ic_ok and mono, detail, dt, 30)
    # the parts that hold are asserted separately so a regression there is visible
    assert neg_ok and mono and oracle_ok
    assert ok, f"I_c = {ics[0.001]:.12f} is below the 0.99 threshold (entropy oracle gives {IC_ORACLE[0.001]})"


def test_criterion_4_fine_tuned_form(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for l2w2 in (0.2, 0.1, 0.01, 0.001):
        lam2 = np.sqrt(l2w2 / W_PAIR)
        for n in (0, 1, 2, 5):
            t = COND.ideal_table(solve_fine_tuning(COND, lam2, n), lam2)
            exact = ch.assemble_rho_EB(ch.ProtocolSpec(t)).matrix
            worst = max(worst, float(np.max(np.abs(ch.fine_tuned_rho_EB(t).matrix - exact))))
    dt = time.perf_counter() - t0
    ok = report(capsys, 4, "fine-tuned closed form", worst <= 1e-10, f"max entry deviation {worst:.2e}", dt, 5)
    assert ok


def test_criterion_5_spacelike_zero_capacity(capsys):
    t0 = time.perf_counter()
    sc = build_scenario(cfgmod.load(CONFIGS / "spacelike.json"))
    rng = np.random.default_rng(5)
    inputs = random_inputs(rng, 10)
    tables = [("field", sc.table), ("random", spacelike_table(rng))]
    worst_td = worst_neg = worst_prod = 0.0
    worst_ic = -np.inf
    for _, table in tables:
        outs, td, neg = input_independence(table, inputs)
        worst_td, worst_neg = max(worst_td, td), max(worst_neg, neg)
        for r, o in zip(inputs, outs):
            prod = ch.spacelike_rho_EB(ch.ProtocolSpec(table, r)).matrix
            worst_prod = max(worst_prod, float(np.max(np.abs(prod - o.matrix))))
        worst_ic = max(worst_ic, ch.channel_coherent_information(ch.make_channel(table)))
    dt = time.perf_counter() - t0
    good = worst_td <= 1e-12 and worst_neg <= 1e-12 and worst_ic <= 0 and worst_prod <= 1e-12
    detail = (f"pairwise trace distance {worst_td:.1e}, negativity {worst_neg:.1e}, "
              f"max I_c {worst_ic:.3f}, product-form deviation {worst_prod:.1e}")
    ok = report(capsys, 5, "spacelike zero capacity", good, detail, dt, 30)
    assert ok


def test_criterion_6_strong_huygens(capsys):
    t0 = time.perf_counter()
    sc = build_scenario(cfgmod.load(CONFIGS / "huygens.json"))
    E = sc.table.E
    ratio = float(np.max(np.abs(E[:2, 2:])) / abs(E[F1, F2]))
    _, worst, _ = input_independence(sc.table, random_inputs(np.random.default_rng(6), 10))
    dt = time.perf_counter() - t0
    ok = report(capsys, 6, "strong Huygens", ratio <= 1e-8 and worst <= 1e-10,
                f"max |E(f_i,g_j)|/|E(f1,f2)| {ratio:.1e}, output spread {worst:.1e}", dt, 60)
    assert ok


def test_criterion_7_bob_solve(capsys):
    t0 = time.perf_counter()
    lam2 = np.sqrt(0.01 / W_PAIR)
    _, c, _ = choose_branch(COND, lam2)
    f1 = SmearingSpec(c * lam2, Delta(0.0), GAUSS)
    f2 = SmearingSpec(lam2, DeltaPrime(0.0), GAUSS)
    g1, g2 = bob_smearing_solve(M31, mode_amplitude(M31, f1, G31), mode_amplitude(M31, f2, G31), 2.0)
    solved = build_bilinear_table(M31, [f1, f2, g1, g2], G31)
    ideal = build_bilinear_table(M31, [f1, f2, f1, f2], G31)
    scale = float(np.max(np.abs(ideal.wightman())))
    dev = float(np.max(np.abs(solved.wightman() - ideal.wightman()))) / scale
    ic_s = ch.channel_coherent_information(ch.make_channel(solved))
    ic_i = ch.channel_coherent_information(ch.make_channel(ideal))
    dt = time.perf_counter() - t0
    ok = report(capsys, 7, "Bob solve", dev <= 1e-10 and abs(ic_s - ic_i) <= 1e-8,
                f"relative bilinear deviation {dev:.1e}, I_c difference {abs(ic_s - ic_i):.1e}", dt, 60)
    assert ok


def test_criterion_8_bilinear_invariants(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    sym = psd = True
    worst_gram = 0.0
    ratios = []
    for i in range(12):
        if i == 0:
            specs = [SmearingSpec(1.0, Delta(0), GAUSS), SmearingSpec(1.0, DeltaPrime(0), GAUSS)] * 2
        else:
            specs = []
            for _ in range(4):
                prof = Gaussian(tuple(rng.uniform(-2, 2, 3)), rng.uniform(0.5, 1.5))
                temporal = (Delta if rng.uniform() < 0.5 else DeltaPrime)(rng.uniform(-2, 2))
                specs.append(SmearingSpec(rng.uniform(0.2, 2.0), temporal, prof))
        t = build_bilinear_table(M31, specs, G31)
        sym &= np.array_equal(t.E, -t.E.T) and np.array_equal(t.H, t.H.T)
        gram = float(np.linalg.eigvalsh(t.wightman())[0]) / max(1e-300, float(np.max(np.abs(t.H))))
        worst_gram = min(worst_gram, gram)
        psd &= gram >= -1e-10
        ratios.append(np.nanmax(t.uncertainty_ratios()))
    conv = refinement_change(M31, [SmearingSpec(1.0, Delta(0), GAUSS), SmearingSpec(1.0, DeltaPrime(0), GAUSS),
                                   SmearingSpec(1.0, Delta(2.0), Gaussian((1, 0, 0), 1.0)),
                                   SmearingSpec(1.0, DeltaPrime(3.0), Gaussian((0, 2, 0), 1.2))], G31)
    dt = time.perf_counter() - t0
    worst_ratio = float(max(ratios))
    literal = worst_ratio <= 1.0
    detail = (f"symmetry {sym}, Gram min eigenvalue {worst_gram:.1e}, max E^2/(W W) {worst_ratio:.6f} "
              f"(literal bound 1, Gram bound 4), grid doubling {conv:.1e}")
    ok = report(capsys, 8, "bilinear invariants", sym and psd and literal and conv < 1e-6, detail, dt, 120)
    assert sym and psd and conv < 1e-6 and worst_ratio <= 4 + 1e-9
    # the Gaussian Delta/DeltaPrime pair sits at E^2 = pi W W
    assert abs(ratios[0] - np.pi) < 1e-10
    assert ok, f"E^2 <= W W violated: max ratio {worst_ratio}"


def test_criterion_9_printed_entry_audit(capsys):
    t0 = time.perf_counter()
    audit = Path(__file__).resolve().parent.parent / "docs" / "printed_entry_audit.md"
    worst_p = worst_x = 0.0
    rng = np.random.default_rng(9)
    tables = [fine_tuned_table(l2w2) for l2w2 in IC_ORACLE] + [ideal_table(rng) for _ in range(20)]
    for table in tables:
        exact = ch.assemble_rho_EB(ch.ProtocolSpec(table)).matrix
        printed = ch.closed_form_rho_EB(table).matrix
        worst_p = max(worst_p, abs(printed[0, 0] - exact[0, 0]), abs(printed[1, 1] - exact[1, 1]))
        worst_x = max(worst_x, abs(printed[1, 2] - exact[1, 2]))
    dt = time.perf_counter() - t0
    ok = report(capsys, 9, "printed-entry audit", audit.exists() and worst_p <= 1e-10 and worst_x <= 1e-10,
                f"report present {audit.exists()}, P deviation {worst_p:.3e}, X deviation {worst_x:.1e}", dt, 60)
    assert audit.exists() and worst_x <= 1e-10
    assert ok, f"printed P entries deviate by {worst_p:.3e}"
