import numpy as np
import pytest

from iqwalk.graph import generate
from iqwalk.ops import (
    EvolutionOperator,
    apply_coin,
    apply_cz,
    apply_move,
    apply_swap,
    build_unitary,
    coin_matrix,
    cz_phases,
    evolve,
    exchange_matrix,
    fourier_coin,
    grover_coin,
    move_matrix,
    spin_matrix,
    step,
)
from iqwalk.observables import position_distribution
from iqwalk.state import LIMITS, GuardError, PureState, basis_index, initial_state
from conftest import random_state

GRAPHS = ["bull", "cycle5", "triangle", "kite-small"]


def make(name):
    if name == "cycle5":
        return generate("cycle", 5)
    if name == "triangle":
        return generate("complete", 3)
    if name == "kite-small":
        return generate("complete", 4)
    return generate(name)


# --- reference: one gate at a time on a dict {(x, c, s): amplitude} ----------

def ref_step(g, psi, coin, mode):
    bit = lambda s, x: (s >> x) & 1
    # coin
    out = {}
    for (x, c, s), a in psi.items():
        block = grover_coin(g.degrees[x]) if coin == "grover" else fourier_coin(g.degrees[x])
        for c2 in range(g.degrees[x]):
            out[(x, c2, s)] = out.get((x, c2, s), 0) + block[c2, c] * a
    # move: |x c_y s> -> |y c_x s>
    psi, out = out, {}
    for (x, c, s), a in psi.items():
        out[(g.adjacency[x][c], g.subnodes[x][c], s)] = a
    # swap
    psi, out = out, {}
    for (x, c, s), a in psi.items():
        if g.degrees[x] > 1 and c == 0 and bit(s, x) == 1:
            out[(x, 1, s - (1 << x))] = a
        elif g.degrees[x] > 1 and c == 1 and bit(s, x) == 0:
            out[(x, 0, s + (1 << x))] = a
        else:
            out[(x, c, s)] = a
    # controlled phase
    psi, out = out, {}
    for (x, c, s), a in psi.items():
        if mode == "incident":
            k = sum(bit(s, x) * bit(s, y) for y in g.adjacency[x])
            out[(x, c, s)] = a * (-1) ** k
        else:
            hit = any(bit(s, x) and bit(s, y) for (u, y) in g.edges if u == x)
            out[(x, c, s)] = -a if hit else a
    return out


@pytest.mark.parametrize("name", GRAPHS)
@pytest.mark.parametrize("coin", ["grover", "fourier"])
@pytest.mark.parametrize("mode", ["edge_list", "incident"])
def test_step_matches_reference(name, coin, mode, rng):
    g = make(name)
    psi = random_state(g, rng)
    ref = ref_step(g, {(x, c, s): psi.amplitudes[x, c, s] for x in range(g.n_nodes)
                       for c in range(g.degrees[x]) for s in range(g.n_spin_configs)}, coin, mode)
    got = step(psi, coin, mode)
    for (x, c, s), a in ref.items():
        assert abs(got.amplitudes[x, c, s] - a) < 1e-12
    assert got.padding_weight() == 0


def test_coins_small():
    assert np.array_equal(grover_coin(2), [[0, 1], [1, 0]])
    assert np.max(np.abs(fourier_coin(2) - np.array([[1, 1], [1, -1]]) / np.sqrt(2))) < 1e-15
    g4 = 0.5 * (np.ones((4, 4)) - 2 * np.eye(4))
    assert np.allclose(grover_coin(4), g4)
    f4 = fourier_coin(4)
    assert np.allclose(f4[1] * 2, [1, np.exp(1j * np.pi / 2), np.exp(1j * np.pi), np.exp(3j * np.pi / 2)])
    for make_coin in (grover_coin, fourier_coin):
        with pytest.raises(ValueError):
            make_coin(0)


@pytest.mark.parametrize("d", range(1, 9))
def test_coin_unitarity(d):
    g = grover_coin(d)
    assert np.allclose(g @ g, np.eye(d)) and np.allclose(g, g.T)
    f = fourier_coin(d)
    assert np.allclose(f.conj().T @ f, np.eye(d))
    assert np.allclose(np.abs(f), 1 / np.sqrt(d))


def test_coin_examples(bull):
    for s in (0, 7):
        psi = PureState.zeros(bull)
        psi.amplitudes[0, 0, s] = 1
        out = apply_coin(psi, "grover")
        assert np.allclose(out.amplitudes[0, :, s], [-1 / 3, 2 / 3, 2 / 3])
        psi = PureState.zeros(bull)
        psi.amplitudes[1, 0, s] = 1
        assert np.array_equal(apply_coin(psi).amplitudes, psi.amplitudes)


def test_move_example(bull):
    psi = PureState.zeros(bull)
    psi.amplitudes[0, 1, 9] = 1
    out = apply_move(psi)
    assert out.amplitudes[3, 0, 9] == 1 and abs(out.norm() - 1) < 1e-15


def test_swap_examples(bull):
    x, s = 3, 0b01000
    psi = PureState.zeros(bull)
    psi.amplitudes[x, 0, s] = 1
    assert apply_swap(psi).amplitudes[x, 1, s - 8] == 1
    psi = PureState.zeros(bull)
    psi.amplitudes[0, 2, 1] = 1
    assert np.array_equal(apply_swap(psi).amplitudes, psi.amplitudes)
    psi = PureState.zeros(bull)
    psi.amplitudes[1, 0, 2] = 1  # degree-1 node: identity even with s_1 = 1
    assert np.array_equal(apply_swap(psi).amplitudes, psi.amplitudes)


def test_cz_examples(bull):
    for mode in ("edge_list", "incident"):
        assert np.all(cz_phases(bull, mode)[:, 0] == 1)
    s = (1 << 3) | (1 << 4)
    assert cz_phases(bull, "incident")[4, s] == -1
    # edge (0, 1) only acts with the walker on node 0
    s = 0b00011
    assert cz_phases(bull, "edge_list")[1, s] == 1
    assert cz_phases(bull, "edge_list")[0, s] == -1
    # two triggering edges at node 0: incident cancels, edge_list stays -1
    s = 0b01011
    assert cz_phases(bull, "incident")[0, s] == 1
    assert cz_phases(bull, "edge_list")[0, s] == -1
    with pytest.raises(ValueError):
        cz_phases(bull, "bogus")


@pytest.mark.parametrize("name", GRAPHS + ["cube"])
def test_involutions(name, rng):
    g = make(name) if name != "cube" else generate("cube")
    for _ in range(10):
        psi = random_state(g, rng)
        for gate in (lambda p: apply_coin(p, "grover"), apply_move, apply_swap,
                     lambda p: apply_cz(p, "edge_list"), lambda p: apply_cz(p, "incident")):
            once = gate(psi)
            assert abs(once.norm() - 1) < 1e-12
            assert once.padding_weight() == 0
            assert np.max(np.abs(gate(once).amplitudes - psi.amplitudes)) < 1e-12
        fourier = apply_coin(psi, "fourier")
        assert abs(fourier.norm() - 1) < 1e-12


def test_move_conserves_position_mass(bull, rng):
    psi = random_state(bull, rng)
    assert abs(position_distribution(apply_move(psi)).sum() - 1) < 1e-12


def test_evolve_zero_steps_and_norm(cube):
    psi0 = initial_state(cube, [(0, 0, 0)])
    states = list(evolve(psi0, 0))
    assert len(states) == 1 and states[0] is psi0
    *_, last = evolve(psi0, 400, "grover")
    assert abs(last.norm() - 1) < 1e-9
    assert last.padding_weight() == 0


def test_cube_support_alternates(cube):
    even, odd = [0, 2, 5, 7], [1, 3, 4, 6]
    for t, psi in enumerate(evolve(initial_state(cube, [(0, 0, 0)]), 40)):
        p = position_distribution(psi)
        off = odd if t % 2 == 0 else even
        assert p[off].sum() < 1e-10


@pytest.mark.parametrize("name", ["bull", "cycle5", "kite-small"])
@pytest.mark.parametrize("coin", ["grover", "fourier"])
@pytest.mark.parametrize("mode", ["edge_list", "incident"])
def test_dense_equals_structured(name, coin, mode):
    g = make(name)
    op = build_unitary(g, coin, mode)
    assert op.dim == g.packed_dim
    assert op.unitarity_error() < 1e-10
    eye = np.eye(g.packed_dim)
    structured = np.column_stack(
        [step(PureState.from_packed(g, eye[:, j]), coin, mode).packed() for j in range(g.packed_dim)]
    )
    assert np.max(np.abs(op.matrix - structured)) < 1e-12


def test_factor_matrices(bull):
    eye = np.eye(bull.packed_dim)
    for f in (move_matrix(bull), exchange_matrix(bull), spin_matrix(bull, "edge_list"),
              spin_matrix(bull, "incident"), coin_matrix(bull, "grover")):
        f = f.toarray()
        assert np.allclose(f @ f, eye)
    fm = coin_matrix(bull, "fourier").toarray()
    assert np.allclose(fm.conj().T @ fm, eye)
    i, j = basis_index(0, 1, 4, bull), basis_index(3, 0, 4, bull)
    assert move_matrix(bull)[j, i] == 1


def test_build_unitary_examples(bull):
    assert build_unitary(bull).dim == 320
    psi0 = initial_state(bull, [(0, 0, 0)])
    u = build_unitary(bull)
    assert np.allclose(u.matrix @ psi0.packed(), step(psi0).packed(), atol=1e-12)


def test_build_unitary_guard(bull):
    old = LIMITS.max_unitary_dim
    LIMITS.max_unitary_dim = 100
    try:
        with pytest.raises(GuardError, match="320"):
            build_unitary(bull)
    finally:
        LIMITS.max_unitary_dim = old


def test_unitary_dump_round_trip(bull, tmp_path):
    op = build_unitary(bull, "fourier")
    bin_path, json_path = op.dump(tmp_path / "u")
    assert bin_path.stat().st_size == 320 * 320 * 16
    raw = np.fromfile(bin_path, dtype="<f8").reshape(320, 640)
    assert np.array_equal(raw[:, 0::2] + 1j * raw[:, 1::2], op.matrix)
    again = EvolutionOperator.load(tmp_path / "u")
    assert np.array_equal(again.matrix, op.matrix) and again.graph == bull
