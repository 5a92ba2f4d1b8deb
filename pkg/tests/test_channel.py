import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ideal_table, random_table, spacelike_table
from udwq import channel as ch
from udwq.errors import NonPhysicalStateError, NumericalContractError, PreconditionError
from udwq.protocol import ProtocolConditions, solve_fine_tuning
from udwq.weyl import F1, F2, BilinearTable

PLUS_Y_DM = np.outer(ch.PLUS_Y, ch.PLUS_Y.conj())
# Alice numbers for the massless 3+1 unit Gaussian
COND = ProtocolConditions(e=-1 / (8 * np.pi**1.5), w1=1 / (8 * np.pi**2), w2=1 / (8 * np.pi**2), h=0.0)


def fine_tuned_table(l2w2, n=0):
    lam2 = np.sqrt(l2w2 / COND.w2)
    return COND.ideal_table(solve_fine_tuning(COND, lam2, n), lam2)


def mp_entropy(m):
    ev = mp.eighe(mp.matrix(m.tolist()))[0]
    return -sum(x * mp.log(x, 2) for x in ev if x > 0)


def test_bell_input_layout():
    rho = ch.TwoQubitState(ch.BELL_EA)
    assert ch.von_neumann_entropy(rho) == pytest.approx(0, abs=1e-12)
    assert ch.negativity(rho) == pytest.approx(0.5)
    np.testing.assert_allclose(rho.env_marginal(), np.eye(2) / 2)


def test_zero_table_leaves_bob_untouched():
    # no field coupling: Alice's qubit stays with the environment, Bob keeps |+y>
    out = ch.assemble_rho_EB(ch.ProtocolSpec(BilinearTable.zeros()))
    np.testing.assert_allclose(out.bob_marginal(), PLUS_Y_DM, atol=1e-14)
    np.testing.assert_allclose(out.matrix, np.kron(PLUS_Y_DM, np.eye(2) / 2), atol=1e-14)
    assert ch.negativity(out) < 1e-14


def test_random_tables_give_density_matrices(rng):
    for i in range(1000):
        t = random_table(rng, scale=rng.uniform(0.05, 3.0))
        out = ch.assemble_rho_EB(ch.ProtocolSpec(t))
        m = out.matrix
        assert np.max(np.abs(m - m.conj().T)) == 0
        assert abs(np.trace(m).real - 1) < 1e-12
        assert np.linalg.eigvalsh(m)[0] > -1e-10


@given(st.integers(0, 2**32 - 1))
def test_channel_is_linear_in_input(seed):
    rng = np.random.default_rng(seed)
    t = random_table(rng)
    chan = ch.make_channel(t)
    v = rng.normal(size=3)
    a = ch.purify(ch.QubitState.from_bloch(v / np.linalg.norm(v) * rng.uniform()))
    b = ch.BELL_EA
    p = rng.uniform()
    mix = chan(p * a + (1 - p) * b).matrix
    np.testing.assert_allclose(mix, p * chan(a).matrix + (1 - p) * chan(b).matrix, atol=1e-13)


def test_make_channel_matches_assemble(rng):
    t = random_table(rng)
    rho = ch.purify(ch.QubitState.from_bloch([0.2, -0.5, 0.1]))
    np.testing.assert_allclose(ch.make_channel(t)(rho).matrix, ch.assemble_rho_EB(ch.ProtocolSpec(t, rho)).matrix,
                               atol=1e-15)


def test_corrected_closed_form_matches_assembly(rng):
    for _ in range(200):
        t = ideal_table(rng)
        exact = ch.assemble_rho_EB(ch.ProtocolSpec(t)).matrix
        np.testing.assert_allclose(ch.corrected_closed_form_rho_EB(t).matrix, exact, atol=1e-12)


def test_printed_form_differs_where_expected(rng):
    # X and B agree, the P entries and the A and C entries do not
    t = BilinearTable.ideal(0.6, 0.3, 0.4, 0.05)
    exact = ch.assemble_rho_EB(ch.ProtocolSpec(t)).matrix
    printed = ch.closed_form_rho_EB(t).matrix
    assert abs(printed[1, 2] - exact[1, 2]) < 1e-12  # X
    assert abs(printed[1, 3] - exact[1, 3]) < 1e-12  # B
    for idx in ((0, 0), (1, 1), (0, 2), (0, 3)):
        assert abs(printed[idx] - exact[idx]) > 1e-3


def test_fine_tuned_form_matches_assembly():
    for l2w2 in (0.1, 0.05, 0.01, 0.001):
        for n in (0, 1, 3):
            t = fine_tuned_table(l2w2, n)
            exact = ch.assemble_rho_EB(ch.ProtocolSpec(t)).matrix
            np.testing.assert_allclose(ch.fine_tuned_rho_EB(t).matrix, exact, atol=1e-10)


def test_fine_tuned_form_general_h(rng):
    for _ in range(20):
        base = ideal_table(rng)
        W11, W22, H12 = base.H[0, 0] / 2, base.H[1, 1] / 2, base.H[0, 1]
        E12 = np.pi / 4
        if E12**2 + H12**2 > 4 * W11 * W22:
            W11 = (E12**2 + H12**2) / (4 * W22) * 1.1
        t = BilinearTable.ideal(W11, W22, E12, H12)
        exact = ch.assemble_rho_EB(ch.ProtocolSpec(t)).matrix
        np.testing.assert_allclose(ch.fine_tuned_rho_EB(t).matrix, exact, atol=1e-12)


def test_fine_tuned_precondition():
    with pytest.raises(PreconditionError):
        ch.fine_tuned_rho_EB(BilinearTable.ideal(1.0, 1.0, 0.5, 0.0))
    # pi/4 - 2 pi is also fine tuned
    t = BilinearTable.ideal(20.0, 1.0, np.pi / 4 - 2 * np.pi, 0.0)
    assert ch.fine_tuning_offset(t.E[F1, F2]) < 1e-12
    ch.fine_tuned_rho_EB(t)


def test_fine_tuned_negativity_closed_form():
    for l2w2 in (0.1, 0.05, 0.01, 0.001):
        rho = ch.assemble_rho_EB(ch.ProtocolSpec(fine_tuned_table(l2w2)))
        assert ch.negativity(rho) == pytest.approx(0.5 * np.exp(-2 * l2w2), abs=1e-10)


def test_entropy_known_values():
    assert ch.von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0)
    assert ch.von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
    assert ch.von_neumann_entropy(np.diag([1.0, 0, 0, 0])) == 0.0
    p = 0.1
    h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    assert ch.von_neumann_entropy(np.diag([p, 1 - p])) == pytest.approx(h, rel=1e-14)


def test_entropy_rejects_bad_input():
    with pytest.raises(NumericalContractError):
        ch.von_neumann_entropy(np.diag([0.7, 0.7]))
    with pytest.raises(NonPhysicalStateError):
        ch.von_neumann_entropy(np.diag([1.2, -0.2]))
    with pytest.raises(NumericalContractError):
        ch.von_neumann_entropy(np.array([[0.5, 0.3], [0.0, 0.5]]))


def test_entropy_extended_precision(rng):
    mp.mp.dps = 40
    for _ in range(10):
        rho = ch.assemble_rho_EB(ch.ProtocolSpec(random_table(rng))).matrix
        rho = np.round(rho, 14)
        rho = (rho + rho.conj().T) / 2
        rho /= np.trace(rho).real
        assert ch.von_neumann_entropy(rho) == pytest.approx(float(mp_entropy(rho)), abs=1e-11)


def test_coherent_information_bounds(rng):
    for _ in range(100):
        out = ch.assemble_rho_EB(ch.ProtocolSpec(random_table(rng)))
        assert -1 - 1e-12 <= ch.coherent_information(out) <= 1 + 1e-12
    assert ch.coherent_information(ch.TwoQubitState(ch.BELL_EB)) == pytest.approx(1.0, abs=1e-12)
    assert ch.coherent_information(ch.TwoQubitState(np.eye(4) / 4)) == pytest.approx(-1.0)


def test_negativity_cases():
    assert ch.negativity(ch.BELL_EB) == pytest.approx(0.5)
    assert ch.negativity(np.eye(4) / 4) == 0
    prod = np.kron(PLUS_Y_DM, np.diag([0.3, 0.7]))
    assert ch.negativity(prod) < 1e-15
    # Werner family: entangled above p = 1/3
    for p in (0.2, 0.5, 0.9):
        rho = p * ch.BELL_EB + (1 - p) * np.eye(4) / 4
        assert ch.negativity(rho) == pytest.approx(max(0.0, (3 * p - 1) / 4), abs=1e-14)


def test_bob_marginal_and_partial_transpose_layout():
    a = np.diag([0.2, 0.8]).astype(complex)
    e = np.array([[0.6, 0.1j], [-0.1j, 0.4]])
    m = ch.TwoQubitState(np.kron(a, e))
    np.testing.assert_allclose(m.bob_marginal(), a)
    np.testing.assert_allclose(m.env_marginal(), e)
    np.testing.assert_allclose(m.partial_transpose_env(), np.kron(a, e.T))


def test_trace_distance_and_purify():
    assert ch.trace_distance(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(1.0)
    psi = ch.purify(ch.QubitState.from_bloch([0.3, 0.4, 0.5]))
    assert np.trace(psi @ psi).real == pytest.approx(1.0)
    red = np.einsum("eaeb->ab", psi.reshape(2, 2, 2, 2))
    np.testing.assert_allclose(red, ch.QubitState.from_bloch([0.3, 0.4, 0.5]).matrix, atol=1e-15)


def test_bloch_grid():
    g = ch.bloch_grid()
    assert g.shape == (27, 3)
    np.testing.assert_allclose(np.linalg.norm(g[:26], axis=1), 1.0)
    assert len({tuple(np.round(v, 12)) for v in g}) == 27


def test_channel_coherent_information_maximizes_over_grid(rng):
    t = fine_tuned_table(0.01)
    best, values = ch.channel_coherent_information(ch.make_channel(t), return_all=True)
    assert best == np.max(values) and values.shape == (27,)
    # unbiased input is the Bell state, which the fine-tuned channel favours
    assert best == pytest.approx(0.90996546022583148442, abs=1e-10)


def test_spacelike_product_form(rng):
    for _ in range(20):
        t = spacelike_table(rng)
        rho = ch.purify(ch.QubitState.from_bloch(rng.uniform(-0.5, 0.5, 3)))
        spec = ch.ProtocolSpec(t, rho)
        np.testing.assert_allclose(ch.spacelike_rho_EB(spec).matrix, ch.assemble_rho_EB(spec).matrix, atol=1e-12)


def test_spacelike_preconditions(rng):
    with pytest.raises(PreconditionError):
        ch.spacelike_rho_EB(ch.ProtocolSpec(ideal_table(rng)))
    with pytest.raises(PreconditionError):
        ch.spacelike_rho_EB(ch.ProtocolSpec(spacelike_table(rng), bob_initial=np.diag([1.0, 0])))


def test_spacelike_input_independence(rng):
    t = spacelike_table(rng)
    chan = ch.make_channel(t)
    outs = [chan(ch.purify(ch.QubitState.from_bloch(v))).bob_marginal() for v in ch.bloch_grid()]
    assert max(ch.trace_distance(o, outs[0]) for o in outs) < 1e-13
    assert ch.classical_signaling(chan, [ch.QubitState.from_bloch(v) for v in ch.bloch_grid()]) < 1e-12
    assert ch.channel_coherent_information(chan) <= 1e-12


def test_input_dependence_by_finite_differences(rng):
    # with cross commutators present Bob's marginal moves with the input
    t = ideal_table(rng)
    chan = ch.make_channel(t)
    base = chan(ch.purify(ch.QubitState.from_bloch([0, 0, 0]))).bob_marginal()
    h = 1e-4
    grads = []
    for axis in np.eye(3):
        bumped = chan(ch.purify(ch.QubitState.from_bloch(h * axis))).bob_marginal()
        grads.append(np.linalg.norm(bumped - base) / h)
    assert max(grads) > 1e-3


def test_signaling_range_and_requirements(rng):
    chan = ch.make_channel(fine_tuned_table(0.001))
    states = [ch.QubitState.from_bloch(v) for v in ((0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0))]
    s = ch.classical_signaling(chan, states)
    assert 0 < s <= 2
    with pytest.raises(PreconditionError):
        ch.classical_signaling(chan, states[:1])


def test_state_validation():
    with pytest.raises(NumericalContractError):
        ch.QubitState(np.eye(3) / 3)
    with pytest.raises(NumericalContractError):
        ch.TwoQubitState(np.eye(2) / 2)
    with pytest.raises(NonPhysicalStateError):
        ch.TwoQubitState(np.diag([1.5, -0.5, 0, 0]))
    ch.TwoQubitState(np.diag([1.5, -0.5, 0, 0]), checked=False)
