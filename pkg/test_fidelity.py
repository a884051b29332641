"""Tests fonctions angulaires φ_t et fidélité moyenne (trois routes).

Usage : python test_fidelity.py
"""

import math
import sys
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from roto_fidelity import (
    QuadratureGrid, angular_table, average_fidelity, averaged_variance, coeff_a,
    combinatorial_identity_check, critical_function, dicke_average_fidelity, dicke_phi_series,
    fidelity_curve, fidelity_from_purities, generalized_quadrature_fidelity, phi, phi_values,
    phi_via_dicke, quadrature_fidelity, reduced_form_fidelity,
)
from roto_specfun import SpinQuantum, spin_operators
from roto_state import dicke_state, random_state

ETAS = np.linspace(0.0, math.pi, 200)


# ── Test 1 : formes closes j = 1 et j = 2 ────────────────────────────────────

def test_spin1_closed_forms():
    """φ_0 = 7/15 + 2x/5 + 2x²/15 et φ_1 = −(2cos η − 3cos 2η + 1)/15."""
    table = angular_table(1)
    x = np.cos(ETAS)
    phi0 = 7 / 15 + 2 * x / 5 + 2 * x ** 2 / 15
    phi1 = -(2 * np.cos(ETAS) - 3 * np.cos(2 * ETAS) + 1) / 15
    assert np.max(np.abs(phi(table, 0, ETAS) - phi0)) < 1e-13
    assert np.max(np.abs(phi(table, 1, ETAS) - phi1)) < 1e-13
    assert table.b[1] == (Fraction(0), Fraction(-4, 3), Fraction(4, 15))
    print("  ✓ j=1 : φ_0 et φ_1 en forme close")


def test_spin2_trig_polynomials():
    """Table b_{t,k} de j=2 contre les polynômes trigonométriques publiés."""
    table = angular_table(2)
    c = [np.cos(r * ETAS) for r in range(5)]
    phi0 = (130 * c[1] + 46 * c[2] + 10 * c[3] + c[4] + 128) / 315
    phi1 = -4 / 315 * (10 * c[1] - 11 * c[2] + 16 * c[3] - 20 * c[4] + 5)
    phi2 = -64 / 105 * np.sin(ETAS / 2) ** 4 * (10 * c[1] + 5 * c[2] + 6)
    for t, expected in enumerate((phi0, phi1, phi2)):
        gap = np.max(np.abs(phi(table, t, ETAS) - expected))
        assert gap < 1e-12, f"φ_{t} : écart {gap:.3e}"
    coherent = dicke_state(2, 2)
    assert abs(average_fidelity(coherent, math.pi) - 1 / 9) < 1e-12
    print("  ✓ j=2 : φ_0, φ_1, φ_2 sur 200 points, F_coh(π) = 1/9")


# ── Test 2 : propriétés de la table ──────────────────────────────────────────

def test_table_properties():
    """φ_t(0) = δ_{t0}, b_{t,t} < 0 et b_{t,k} = 0 pour k < t."""
    for two_j in range(2, 53):
        table = angular_table(SpinQuantum(two_j))
        for t in range(1, table.j.floor_j + 1):
            row = table.b[t]
            assert row[t] < 0, f"N={two_j} : b_{t},{t} = {row[t]}"
            assert all(b == 0 for b in row[:t]), f"N={two_j} : b_{t},k ≠ 0 pour k < {t}"
        if two_j <= 20:
            at_zero = phi_values(table, 0.0)
            expected = np.zeros(table.j.floor_j + 1)
            expected[0] = 1.0
            assert np.max(np.abs(at_zero - expected)) < 1e-14, f"N={two_j} : φ(0) = {at_zero}"
    rows = angular_table(1).rows()
    assert len(rows) == 6 and rows[0] == (0, 0, 1, 1)
    assert coeff_a(1, 1, 1) == Fraction(8, 3) and coeff_a(1, 1, 0) == 0
    try:
        coeff_a(1, 3, 0)
    except ValueError:
        pass
    else:
        raise AssertionError("a_{3,0} accepté pour j=1")
    print("  ✓ table angulaire j ≤ 26 : b_tt < 0, φ_t(0) = δ")


def test_critical_function():
    """g(η) tétraèdre − chat s'annule en 2·arctan(√(9 − 2√15)), mauvaise longueur refusée."""
    table = angular_table(2)
    eta1 = 2 * math.atan(math.sqrt(9 - 2 * math.sqrt(15)))
    assert abs(critical_function(table, (1, 1), (1, 0.75), eta1)) < 1e-12
    curve = critical_function(table, (1, 1), (1, 0.75), ETAS)
    assert curve.shape == ETAS.shape
    assert abs(curve[50] - 0.25 * phi(table, 2, ETAS[50])) < 1e-14
    for first, second in [((1,), (1, 0.75)), ((1, 0.75), (1,)), ((1, 1, 1), (1, 0.75)), ((1,), (1,))]:
        try:
            critical_function(table, first, second, 1.0)
        except ValueError:
            continue
        raise AssertionError(f"profils {first} / {second} acceptés pour j=2")
    print("  ✓ critical_function")


def test_combinatorial_identity():
    """Σ 2^s C(k,s) C(k−s,q) C(2N−2k, N−s−2q) = C(2N,N) pour N ≤ 30."""
    count = 0
    for n in range(0, 31):
        for k in range(n + 1):
            assert combinatorial_identity_check(n, k), f"identité fausse pour N={n}, k={k}"
            count += 1
    print(f"  ✓ identité combinatoire : {count} cas exacts")


# ── Test 3 : valeurs universelles ────────────────────────────────────────────

def test_universal_values():
    """F(η₀) indépendante de l'état : 7/27 (j=1), (33+2√21)/180 (j=3/2)."""
    eta1 = math.acos(-2 / 3)
    eta32 = math.acos((-9 + math.sqrt(21)) / 12)
    for seed in range(5):
        f1 = average_fidelity(random_state(1, seed), eta1)
        assert abs(f1 - 7 / 27) < 1e-12, f"j=1 : F(η₀) = {f1}"
        f32 = average_fidelity(random_state("3/2", seed), eta32)
        assert abs(f32 - (33 + 2 * math.sqrt(21)) / 180) < 1e-12, f"j=3/2 : F(η₀) = {f32}"
        assert abs(f32 - 0.2342508411) < 1e-10
    print("  ✓ valeurs universelles j=1 et j=3/2")


def test_reflection_symmetry():
    """F(η) = F(2π − η)."""
    etas = np.linspace(0.05, math.pi, 40)
    for j in ("3/2", "3", "9/2"):
        state = random_state(j, 8)
        gap = np.max(np.abs(average_fidelity(state, etas) - average_fidelity(state, 2 * math.pi - etas)))
        assert gap < 1e-12, f"j={j} : écart {gap:.3e}"
    print("  ✓ symétrie η ↔ 2π − η")


# ── Test 4 : routes indépendantes ────────────────────────────────────────────

def test_dicke_route():
    """Système linéaire sur |j,m⟩ = table close, j ≤ 10, coefficients exacts identiques."""
    etas = np.linspace(0.0, math.pi, 100)
    worst = 0.0
    for two_j in range(2, 21):
        spin = SpinQuantum(two_j)
        gap = float(np.max(np.abs(phi_via_dicke(spin, etas) - phi_values(angular_table(spin), etas))))
        worst = max(worst, gap)
        assert gap < 1e-8, f"j={spin} : écart {gap:.3e}"
        assert tuple(s.exact for s in dicke_phi_series(spin)) == angular_table(spin).b, f"j={spin}"
    print(f"  ✓ route Dicke j ≤ 10 : écart max {worst:.2e}")


def test_dicke_fidelity():
    """F_{|j,m⟩} par caractères généralisés = F par la table, j ≤ 4."""
    etas = np.linspace(0.0, math.pi, 50)
    for two_j in range(1, 9):
        spin = SpinQuantum(two_j)
        for i in range(spin.dim):
            m = Fraction(two_j - 2 * i, 2)
            gap = np.max(np.abs(
                dicke_average_fidelity(spin, m, etas) - average_fidelity(dicke_state(spin, m), etas)
            ))
            assert gap < 1e-9, f"|{spin},{m}⟩ : écart {gap:.3e}"
    print("  ✓ fidélité des états de Dicke j ≤ 4")


def test_quadrature_route():
    """Intégrale directe sur la sphère = forme close, j ≤ 6."""
    rng = np.random.default_rng(0)
    etas = np.sort(rng.uniform(0.0, math.pi, 25))
    worst = 0.0
    for two_j in range(1, 13):
        for seed in range(3):
            state = random_state(SpinQuantum(two_j), seed)
            gap = float(np.max(np.abs(quadrature_fidelity(state, etas) - average_fidelity(state, etas))))
            worst = max(worst, gap)
            assert gap < 1e-10, f"N={two_j}, seed={seed} : écart {gap:.3e}"
    print(f"  ✓ quadrature j ≤ 6 : écart max {worst:.2e}")


def test_purity_forms():
    """Double somme complète et forme réduite = forme close."""
    etas = np.linspace(0.0, math.pi, 30)
    for j in ("1", "2", "3", "7/2"):
        state = random_state(j, 4)
        closed = average_fidelity(state, etas)
        for label, form in (("puretés", fidelity_from_purities), ("réduite", reduced_form_fidelity)):
            gap = np.max(np.abs(form(state, etas) - closed))
            assert gap < 1e-10, f"j={j}, forme {label} : écart {gap:.3e}"
    curve = fidelity_curve(random_state(2, 1), [0.3], route="purities")
    assert curve.shape == (1,)
    try:
        fidelity_curve(random_state(2, 1), [0.3], route="monte-carlo")
    except ValueError:
        pass
    else:
        raise AssertionError("route inconnue acceptée")
    print("  ✓ formes par puretés (double somme et réduite)")


# ── Test 5 : généralisations ─────────────────────────────────────────────────

def test_square_generator_expm():
    """f = carré : quadrature produit contre exponentielle matricielle dense."""
    spin = SpinQuantum(2)
    state = dicke_state(spin, 1)
    eta = math.pi / 4
    jx, jy, jz = spin_operators(spin)
    grid = QuadratureGrid(12, 24)
    total = 0.0
    for a, theta in enumerate(grid.thetas):
        for b, phi_ in enumerate(grid.phis):
            jn = (
                math.sin(theta) * math.cos(phi_) * jx
                + math.sin(theta) * math.sin(phi_) * jy
                + math.cos(theta) * jz
            )
            amp = state.amps.conj() @ expm(-1j * eta * (jn @ jn)) @ state.amps
            total += grid.weights[a, b] * abs(amp) ** 2
    got = generalized_quadrature_fidelity(state, eta, p=1, f="square")
    assert abs(got - total) < 1e-8, f"f=carré : {got} ≠ {total}"
    same = generalized_quadrature_fidelity(state, eta, p=1, f="identity")
    assert abs(same - average_fidelity(state, eta)) < 1e-10
    print("  ✓ générateur f(J·n) = (J·n)² contre expm")


def test_power_p():
    """p = 2 : moyenne de |⟨ψ|R|ψ⟩|⁴ ≤ moyenne de |⟨ψ|R|ψ⟩|² et = 1 en η = 0."""
    state = random_state("3/2", 9)
    etas = np.linspace(0.0, math.pi, 9)
    f2 = generalized_quadrature_fidelity(state, etas, p=2)
    f1 = quadrature_fidelity(state, etas)
    assert abs(f2[0] - 1.0) < 1e-12
    assert np.all(f2 <= f1 + 1e-12)
    for bad in (dict(p=0), dict(f="cube")):
        try:
            generalized_quadrature_fidelity(state, 0.5, **bad)
        except ValueError:
            continue
        raise AssertionError(f"{bad} accepté")
    print("  ✓ exposant p et contrôles d'arguments")


def test_undersized_grid():
    """Une grille trop petite pour le degré est refusée."""
    state = random_state(2, 0)
    try:
        quadrature_fidelity(state, 0.5, grid=QuadratureGrid(2, 3))
    except ValueError:
        pass
    else:
        raise AssertionError("grille (2, 3) acceptée pour j=2")
    assert QuadratureGrid.for_degree(4).is_exact_for(4)
    assert abs(QuadratureGrid(5, 7).weights.sum() - 1.0) < 1e-14
    print("  ✓ grille sous-dimensionnée refusée")


# ── Test 6 : variance moyenne et petits angles ───────────────────────────────

def test_averaged_variance():
    """V(|1/2,1/2⟩) = 1/6, V(cohérent j) = j/3."""
    assert abs(averaged_variance(dicke_state("1/2", "1/2")) - 1 / 6) < 1e-14
    for j in ("1", "2", "7/2"):
        spin = SpinQuantum.parse(j)
        got = averaged_variance(dicke_state(spin, spin.j))
        assert abs(got - float(spin.j) / 3) < 1e-12, f"j={j} : V = {got}"
    print("  ✓ variance moyenne")


def test_small_angle_law():
    """(1 − F(η))/η² → V, extrapolation de Richardson en η ∈ {1e−2, 5e−3}."""
    for j in ("1", "2", "3", "4"):
        for seed in range(3):
            state = random_state(j, seed)
            v = averaged_variance(state)
            r1 = (1 - average_fidelity(state, 1e-2)) / 1e-4
            r2 = (1 - average_fidelity(state, 5e-3)) / 2.5e-5
            extrapolated = (4 * r2 - r1) / 3
            assert abs(extrapolated - v) < 1e-6, f"j={j}, seed={seed} : {extrapolated} ≠ {v}"
    print("  ✓ loi des petits angles F ≈ 1 − η² V")


# ── Runner ───────────────────────────────────────────────────────────────────

TESTS = [
    test_spin1_closed_forms,
    test_spin2_trig_polynomials,
    test_table_properties,
    test_critical_function,
    test_combinatorial_identity,
    test_universal_values,
    test_reflection_symmetry,
    test_dicke_route,
    test_dicke_fidelity,
    test_quadrature_route,
    test_purity_forms,
    test_square_generator_expm,
    test_power_p,
    test_undersized_grid,
    test_averaged_variance,
    test_small_angle_law,
]


def main():
    print(f"Tests fonctions angulaires et fidélité\n{'─' * 50}")
    errors = []
    for test in TESTS:
        name = test.__name__
        try:
            test()
        except Exception as exc:
            errors.append((name, exc))
            print(f"  ✗ {name} : {exc}")

    print(f"\n{'─' * 50}")
    if errors:
        print(f"❌ {len(errors)}/{len(TESTS)} test(s) échoués")
        sys.exit(1)
    else:
        print(f"✅ {len(TESTS)}/{len(TESTS)} tests passés")


if __name__ == "__main__":
    main()
