import itertools
import math

import numpy as np
import pytest

from router_sim import elements, fock
from router_sim.elements import RouterOrientation, apply_element
from router_sim.errors import BadParam, UnsupportedSector
from dense_oracle import (
    dense_element,
    enumerate_basis,
    max_amplitude_deviation,
    state_to_vector,
)


def modes(*names):
    return [fock.mode(n) for n in names]


def one_photon(state, label):
    return fock.inject_photon(state, label)


# ---------------------------------------------------------------------------
# beamsplitters and phase shifters
# ---------------------------------------------------------------------------

def test_full_reflection_is_identity_like():
    ms = modes("a", "b")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.beamsplitter(1.0, *ms))
    assert out.amplitude((1, 0)) == pytest.approx(1.0)


def test_balanced_split_moduli():
    ms = modes("a", "b")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.beamsplitter(0.5, *ms))
    assert abs(out.amplitude((1, 0))) == pytest.approx(abs(out.amplitude((0, 1))))


def test_one_third_reflectivity():
    ms = modes("a", "b")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.beamsplitter(1 / 3, *ms))
    assert abs(out.amplitude((1, 0))) ** 2 == pytest.approx(1 / 3)


def test_bad_reflectivity():
    ms = modes("a", "b")
    with pytest.raises(BadParam):
        elements.beamsplitter(1.5, *ms)


def test_phase_shifter_photon_number_scaling():
    ms = modes("a")
    state = fock.register_modes(ms)
    state = fock.inject_photon(state, ms[0])
    state = fock.inject_photon(state, ms[0])
    out = apply_element(state, elements.phase_shifter(math.pi / 2, ms[0]))
    assert out.amplitude((2,)) == pytest.approx(np.exp(1j * math.pi))


# ---------------------------------------------------------------------------
# NS gates
# ---------------------------------------------------------------------------

def test_ns_single_action():
    ms = modes("a")
    vac = fock.register_modes(ms)
    gate = elements.ns_single(ms[0])
    assert apply_element(vac, gate).amplitude((0,)) == pytest.approx(1.0)
    one = fock.inject_photon(vac, ms[0])
    assert apply_element(one, gate).amplitude((1,)) == pytest.approx(1.0)
    two = fock.inject_photon(one, ms[0])
    assert apply_element(two, gate).amplitude((2,)) == pytest.approx(-1.0)


def test_ns_two_mode_sign_flip_on_11():
    """|1,1> -> -|1,1>, checked against the dense two-photon matrix
    product of the composite."""
    ms = modes("a", "b")
    vac = fock.register_modes(ms)
    state = fock.inject_photon(fock.inject_photon(vac, ms[0]), ms[1])
    gate = elements.ns_two_mode(*ms)
    out = apply_element(state, gate)
    assert out.amplitude((1, 1)) == pytest.approx(-1.0)
    assert sum(abs(a) ** 2 for a in out.amplitudes.values()) == pytest.approx(1.0)

    configs, index = enumerate_basis(2, 2)
    dense = dense_element(gate, tuple(ms), configs, index, 2)
    expected = dense @ state_to_vector(state, configs, index)
    assert max_amplitude_deviation(out, expected, configs, index) < 1e-12


def test_ns_two_mode_single_photon_passthrough():
    ms = modes("a", "b")
    vac = fock.register_modes(ms)
    gate = elements.ns_two_mode(*ms)
    one = fock.inject_photon(vac, ms[0])
    out = apply_element(one, gate)
    assert out.amplitude((1, 0)) == pytest.approx(1.0)
    other = fock.inject_photon(vac, ms[1])
    assert apply_element(other, gate).amplitude((0, 1)) == pytest.approx(1.0)


def test_ns_two_mode_vacuum_invariant():
    ms = modes("a", "b")
    vac = fock.register_modes(ms)
    out = apply_element(vac, elements.ns_two_mode(*ms))
    assert out.amplitude((0, 0)) == pytest.approx(1.0)


def test_ns_two_mode_self_inverse():
    ms = modes("a", "b")
    vac = fock.register_modes(ms)
    gate = elements.ns_two_mode(*ms)
    for config in ((0, 0), (1, 0), (0, 1), (1, 1)):
        basis = fock.basis_state(vac, config)
        twice = apply_element(apply_element(basis, gate), gate)
        assert twice.amplitude(config) == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# routers
# ---------------------------------------------------------------------------

def router_register():
    ms = modes("a", "b", "c", "spec")
    return ms, fock.register_modes(ms)


def test_router_reflects_on_match():
    ms, vac = router_register()
    state = fock.inject_photon(fock.inject_photon(vac, ms[0]), ms[2])
    out = apply_element(state, elements.pqr_ideal(ms[0], ms[1], ms[2]))
    assert out.amplitude((0, 1, 1, 0)) == pytest.approx(1.0)


def test_router_transmits_on_mismatch():
    ms, vac = router_register()
    state = fock.inject_photon(vac, ms[0])
    out = apply_element(state, elements.pqr_ideal(ms[0], ms[1], ms[2]))
    assert out.amplitude((1, 0, 0, 0)) == pytest.approx(1.0)


def test_router_vacuum_passthrough():
    ms, vac = router_register()
    out = apply_element(vac, elements.pqr_ideal(ms[0], ms[1], ms[2]))
    assert out.amplitude((0, 0, 0, 0)) == pytest.approx(1.0)


def test_router_unsupported_sector():
    ms, vac = router_register()
    two = fock.inject_photon(fock.inject_photon(vac, ms[0]), ms[0])
    with pytest.raises(UnsupportedSector):
        apply_element(two, elements.pqr_ideal(ms[0], ms[1], ms[2]))


def test_router_orientation_designates_ports():
    ms, _ = router_register()
    reflecting = elements.pqr_ideal(ms[0], ms[1], ms[2])
    assert reflecting.kept_port == ms[1]
    assert reflecting.discarded_port == ms[0]
    transmitting = elements.pqr_ideal(
        ms[0], ms[1], ms[2], RouterOrientation.TRANSMIT_ON_MATCH
    )
    assert transmitting.kept_port == ms[0]
    assert transmitting.discarded_port == ms[1]


def test_decomposed_router_routes_with_control():
    ms, vac = router_register()
    state = fock.inject_photon(fock.inject_photon(vac, ms[0]), ms[2])
    out = apply_element(state, elements.pqr_decomposed(ms[0], ms[1], ms[2]))
    assert out.amplitude((0, 1, 1, 0)) == pytest.approx(1.0, abs=1e-12)


def test_decomposed_router_transmits_without_control():
    ms, vac = router_register()
    state = fock.inject_photon(vac, ms[0])
    out = apply_element(state, elements.pqr_decomposed(ms[0], ms[1], ms[2]))
    assert out.amplitude((1, 0, 0, 0)) == pytest.approx(1.0, abs=1e-12)


def test_decomposed_equals_ideal_on_supported_sector():
    """Exhaustive sweep of <=2-photon basis configurations: identical
    amplitudes (common global phase one) and identical sector errors."""
    ms, vac = router_register()
    ideal = elements.pqr_ideal(ms[0], ms[1], ms[2])
    decomposed = elements.pqr_decomposed(ms[0], ms[1], ms[2])
    checked = 0
    for config in itertools.product(range(3), repeat=4):
        if sum(config) > 2:
            continue
        basis = fock.basis_state(vac, config)
        try:
            out_ideal = apply_element(basis, ideal)
        except UnsupportedSector:
            with pytest.raises(UnsupportedSector):
                apply_element(basis, decomposed)
            continue
        out_decomposed = apply_element(basis, decomposed)
        support = set(out_ideal.amplitudes) | set(out_decomposed.amplitudes)
        for c in support:
            assert out_ideal.amplitude(c) == pytest.approx(
                out_decomposed.amplitude(c), abs=1e-10
            )
        fid = abs(fock.inner_product(out_ideal, out_decomposed)) ** 2
        assert fid >= 1 - 1e-10
        checked += 1
    assert checked >= 10


# ---------------------------------------------------------------------------
# tunneling and relabel
# ---------------------------------------------------------------------------

def test_tunneling_even_split_at_quarter_pi():
    ms = modes("A", "B")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.tunneling(math.pi / 4, *ms))
    assert out.amplitude((1, 0)) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude((0, 1)) == pytest.approx(-1j / math.sqrt(2))


def test_tunneling_full_transfer_at_half_pi():
    ms = modes("A", "B")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.tunneling(math.pi / 2, *ms))
    assert out.amplitude((0, 1)) == pytest.approx(-1j)


def test_tunneling_zero_is_identity():
    ms = modes("A", "B")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.tunneling(0.0, *ms))
    assert out.amplitude((1, 0)) == pytest.approx(1.0)


def test_tunneling_group_property():
    rng = np.random.default_rng(9)
    ms = modes("A", "B")
    state = fock.superposition_source(
        fock.register_modes(ms), {ms[0]: 0.6, ms[1]: 0.8j}
    )
    for _ in range(10):
        t1, t2 = rng.uniform(-math.pi, math.pi, size=2)
        stepped = apply_element(
            apply_element(state, elements.tunneling(t1, *ms)),
            elements.tunneling(t2, *ms),
        )
        direct = apply_element(state, elements.tunneling(t1 + t2, *ms))
        for c in set(stepped.amplitudes) | set(direct.amplitudes):
            assert stepped.amplitude(c) == pytest.approx(
                direct.amplitude(c), abs=1e-10
            )


def test_relabel_identity():
    ms = modes("a", "b")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.relabel({ms[0]: ms[0]}))
    assert out.amplitude((1, 0)) == pytest.approx(1.0)


def test_relabel_swap():
    ms = modes("a", "b")
    state = one_photon(fock.register_modes(ms), ms[0])
    out = apply_element(state, elements.relabel({ms[0]: ms[1], ms[1]: ms[0]}))
    assert out.amplitude((0, 1)) == pytest.approx(1.0)


def test_relabel_preserves_amplitudes():
    ms = modes("c1", "c2")
    state = fock.superposition_source(
        fock.register_modes(ms), {ms[0]: 0.6, ms[1]: 0.8j}
    )
    out = apply_element(state, elements.relabel({ms[0]: ms[1], ms[1]: ms[0]}))
    assert out.amplitude((0, 1)) == pytest.approx(0.6)
    assert out.amplitude((1, 0)) == pytest.approx(0.8j)


def test_relabel_rejects_non_bijection():
    ms = modes("a", "b", "c")
    with pytest.raises(BadParam):
        elements.relabel({ms[0]: ms[1]})


# ---------------------------------------------------------------------------
# generic element properties
# ---------------------------------------------------------------------------

def all_test_elements(ms):
    return [
        elements.beamsplitter(0.3, ms[0], ms[1]),
        elements.phase_shifter(1.1, ms[0]),
        elements.ns_single(ms[0]),
        elements.ns_two_mode(ms[0], ms[1]),
        elements.pqr_ideal(ms[0], ms[1], ms[2]),
        elements.pqr_decomposed(ms[0], ms[1], ms[2]),
        elements.tunneling(0.7, ms[0], ms[1]),
        elements.relabel({ms[0]: ms[2], ms[2]: ms[0]}),
    ]


def test_elements_preserve_norm():
    rng = np.random.default_rng(21)
    ms = modes("a", "b", "c")
    for element in all_test_elements(ms):
        state = fock.register_modes(ms)
        state = fock.superposition_source(
            state,
            {m: w for m, w in zip(ms, rng.normal(size=3) + 1j * rng.normal(size=3))},
        )
        out = apply_element(state, element)
        assert out.norm() == pytest.approx(1.0, abs=1e-10)


def test_elements_adjoint_inverts():
    rng = np.random.default_rng(22)
    ms = modes("a", "b", "c")
    for element in all_test_elements(ms):
        state = fock.register_modes(ms)
        state = fock.superposition_source(
            state,
            {m: w for m, w in zip(ms, rng.normal(size=3) + 1j * rng.normal(size=3))},
        )
        back = apply_element(apply_element(state, element), element, adjoint=True)
        for c in set(back.amplitudes) | set(state.amplitudes):
            assert back.amplitude(c) == pytest.approx(
                state.amplitude(c), abs=1e-10
            )
