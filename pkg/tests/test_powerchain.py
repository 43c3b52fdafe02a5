import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadenet.powerchain import (
    PowerChain,
    SizeGuardError,
    brute_force_kappa,
    decompose,
    is_power_chain,
    longest_chain,
    order_permutation,
    validate_chain,
)
from fadenet.topology import Topology, generate, parse_generator_spec, prune


def test_order_permutation_sorts_by_magnitude():
    x = np.array([1.0, 3.0, 2.0], dtype=complex)
    assert order_permutation(x) == (2, 3, 1)


def test_order_permutation_ties_break_to_lower_index():
    x = np.array([2.0, 2.0, 5.0], dtype=complex)
    assert order_permutation(x) == (3, 1, 2)
    assert order_permutation(np.zeros(4, dtype=complex)) == (1, 2, 3, 4)


def test_order_permutation_uses_magnitude_not_phase():
    x = np.array([-4.0, 1j, 2.0 + 2.0j])
    # magnitudes 4, 1, 2.828
    assert order_permutation(x) == (1, 3, 2)


@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False), min_size=1, max_size=8))
@settings(max_examples=200, deadline=None)
def test_order_permutation_is_permutation(values):
    x = np.array(values, dtype=complex)
    perm = order_permutation(x)
    assert sorted(perm) == list(range(1, len(values) + 1))
    mags = [abs(x[p - 1]) for p in perm]
    assert all(a >= b for a, b in zip(mags, mags[1:]))


def test_is_power_chain_on_wyner():
    topo = generate("wyner_linear", 3)
    assert is_power_chain(topo, (1, 2, 3))
    assert is_power_chain(topo, (3, 2, 1))
    assert is_power_chain(topo, ())
    # 2 covers receivers {2,3}; then 1 brings receiver 1, fine either way
    assert is_power_chain(topo, (2, 1))
    # full hearing: nobody after the first can bring a fresh receiver
    full = generate("full", 3, 3)
    assert is_power_chain(full, (2,))
    assert not is_power_chain(full, (2, 1))


def test_is_power_chain_rejects_bad_input():
    topo = generate("diagonal", 3)
    with pytest.raises(ValueError):
        is_power_chain(topo, (1, 1))
    with pytest.raises(ValueError):
        is_power_chain(topo, (0,))
    with pytest.raises(ValueError):
        is_power_chain(topo, (4,))


@pytest.mark.parametrize(
    "spec,expected",
    [
        ("full:1,1", 1),
        ("full:2,2", 1),
        ("full:5,5", 1),
        ("diagonal:1", 1),
        ("diagonal:3", 3),
        ("diagonal:8", 8),
        ("wyner_linear:3", 3),
        ("wyner_cyclic:4", 3),
        ("wyner_cyclic:6", 5),
    ],
)
def test_longest_chain_known_values(spec, expected):
    topo = parse_generator_spec(spec)
    kappa, chain = longest_chain(topo)
    assert kappa == expected
    assert len(chain) == expected
    validate_chain(topo, chain)


def test_longest_chain_prefers_smallest_indices():
    kappa, chain = longest_chain(generate("diagonal", 4))
    assert chain.transmitters == (1, 2, 3, 4)
    assert chain.witnesses == (1, 2, 3, 4)
    kappa, chain = longest_chain(generate("full", 3, 2))
    assert kappa == 1
    assert chain.transmitters == (1,)
    assert chain.witnesses == (1,)


def test_longest_chain_matches_brute_force_small_random():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 40:
        n_t = int(rng.integers(1, 7))
        n_r = int(rng.integers(1, 7))
        topo = generate("random", n_t, n_r, float(rng.uniform(0.2, 0.8)), seed=int(rng.integers(1 << 30)))
        if topo.is_empty:
            continue
        assert longest_chain(topo)[0] == brute_force_kappa(topo)
        checked += 1


def test_size_guards():
    with pytest.raises(SizeGuardError):
        longest_chain(generate("diagonal", 25))
    with pytest.raises(SizeGuardError):
        brute_force_kappa(generate("full", 8, 2))
    # guards are parameters, not constants
    with pytest.raises(SizeGuardError):
        longest_chain(generate("diagonal", 4), max_receivers=3)
    assert brute_force_kappa(generate("diagonal", 4), max_transmitters=4) == 4


def test_longest_chain_empty_topology():
    empty = prune(Topology(n_t=1, n_r=1, zeros=frozenset({(1, 1)}))).topology
    with pytest.raises(ValueError):
        longest_chain(empty)


def test_validate_chain_rejects_heard_witness():
    topo = generate("wyner_linear", 3)
    # receiver 2 hears transmitter 1, so it cannot witness a successor of 1
    chain = PowerChain(transmitters=(1, 2), witnesses=(1, 2))
    with pytest.raises(ValueError):
        validate_chain(topo, chain)
    validate_chain(topo, PowerChain(transmitters=(1, 2), witnesses=(1, 3)))


def test_validate_chain_rejects_unheard_witness():
    topo = generate("diagonal", 2)
    with pytest.raises(ValueError):
        validate_chain(topo, PowerChain(transmitters=(1,), witnesses=(2,)))


def test_power_chain_length_mismatch():
    with pytest.raises(ValueError):
        PowerChain(transmitters=(1, 2), witnesses=(1,))


def test_decompose_identity_diagonal():
    topo = generate("diagonal", 3)
    dec = decompose(topo, (1, 2, 3))
    assert dec.kappa == 3
    assert dec.chain_positions == (1, 2, 3)
    assert dec.chain.transmitters == (1, 2, 3)
    assert dec.receiver_blocks == ({1}, {2}, {3})
    assert dec.transmitter_blocks == ({1}, {2}, {3})


def test_decompose_full_keeps_only_first():
    topo = generate("full", 3, 2)
    dec = decompose(topo, (2, 3, 1))
    assert dec.kappa == 1
    assert dec.chain_positions == (1,)
    assert dec.chain.transmitters == (2,)
    assert dec.receiver_blocks == ({1, 2},)
    assert dec.transmitter_blocks == ({1, 2, 3},)


def test_decompose_wyner_reversed():
    topo = generate("wyner_linear", 3)
    dec = decompose(topo, (3, 2, 1))
    # 3 covers {3,4}; 2 adds {2}; 1 adds {1}
    assert dec.kappa == 3
    assert dec.chain.transmitters == (3, 2, 1)
    assert dec.receiver_blocks == ({3, 4}, {2}, {1})
    assert dec.chain.witnesses == (3, 2, 1)


def test_decompose_validates_permutation_and_pruning():
    topo = generate("diagonal", 3)
    with pytest.raises(ValueError):
        decompose(topo, (1, 2))
    with pytest.raises(ValueError):
        decompose(topo, (1, 2, 2))
    unpruned = Topology(n_t=2, n_r=2, zeros=frozenset({(1, 2), (2, 2)}))
    with pytest.raises(ValueError):
        decompose(unpruned, (1, 2))


def _random_pruned(rng) -> Topology:
    while True:
        topo = generate(
            "random",
            int(rng.integers(1, 6)),
            int(rng.integers(1, 6)),
            float(rng.uniform(0.2, 0.8)),
            seed=int(rng.integers(1 << 30)),
        )
        if not topo.is_empty:
            return topo


def test_decompose_invariants_over_all_permutations():
    rng = np.random.default_rng(99)
    for _ in range(12):
        topo = _random_pruned(rng)
        kappa_star, _ = longest_chain(topo)
        best = 0
        for perm in itertools.permutations(range(1, topo.n_t + 1)):
            dec = decompose(topo, perm)
            assert dec.kappa <= kappa_star
            covered = set().union(*dec.receiver_blocks)
            assert covered == set(range(1, topo.n_r + 1))
            assert sum(len(b) for b in dec.receiver_blocks) == topo.n_r
            flat = [t for block in dec.transmitter_blocks for t in block]
            assert sorted(flat) == list(range(1, topo.n_t + 1))
            validate_chain(topo, dec.chain)
            best = max(best, dec.kappa)
        assert best == kappa_star
