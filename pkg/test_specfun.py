"""Tests combinatoire exacte et fonctions spéciales (roto_specfun).

Usage : python test_specfun.py
"""

import math
import sys
from fractions import Fraction

import numpy as np

from roto_specfun import (
    SpinQuantum, as_doubled, binomial_exact, character, clebsch_gordan, clebsch_gordan_squared,
    double_factorial_ratio, generalized_character, generalized_character_squared,
    jacobi_coefficients, jacobi_poly, rotation_matrix, spin_operators, wigner_small_d,
)

SPINS = ["1/2", "1", "3/2", "2", "5/2", "3", "7/2", "4", "5"]


# ── Test 1 : SpinQuantum ──────────────────────────────────────────────────────

def test_spin_parse():
    """"5/2", "2.5", 3 et Fraction donnent le même N = 2j ; j = 0 et 1/3 refusés."""
    assert SpinQuantum.parse("5/2") == SpinQuantum.parse("2.5") == SpinQuantum(5)
    assert SpinQuantum.parse(3).two_j == 6
    assert SpinQuantum.parse(Fraction(7, 2)).dim == 8
    assert SpinQuantum.parse("7/2").floor_j == 3
    assert str(SpinQuantum(5)) == "5/2" and str(SpinQuantum(4)) == "2"
    assert list(SpinQuantum(2).m_values()) == [1.0, 0.0, -1.0]
    for bad in ("0", "1/3", "-1", "abc"):
        try:
            SpinQuantum.parse(bad)
        except ValueError:
            continue
        raise AssertionError(f"{bad!r} aurait dû être refusé")
    assert as_doubled("-3/2") == -3 and as_doubled(2) == 4
    print("  ✓ SpinQuantum.parse / as_doubled")


# ── Test 2 : binomiaux exacts ─────────────────────────────────────────────────

def test_binomial_exact():
    """C(4,2)=6, C(10,0)=1, C(52,26) exact, zéro hors domaine."""
    assert binomial_exact(4, 2) == 6
    assert binomial_exact(10, 0) == 1
    assert binomial_exact(52, 26) == 495918532948104
    assert binomial_exact(5, -1) == 0 and binomial_exact(5, 6) == 0
    assert isinstance(binomial_exact(52, 26), Fraction)
    assert double_factorial_ratio(1) == Fraction(4, 3)         # 4!! / (2·3!!)
    assert double_factorial_ratio(2) == Fraction(8, 5)         # 6!! / (2·5!!)
    print("  ✓ binomial_exact")


# ── Test 3 : Clebsch-Gordan ───────────────────────────────────────────────────

def test_clebsch_gordan_values():
    """Couplage trivial, singulet, ⟨1 1; 1 0 | 1 1⟩ et règles de sélection."""
    for j, m in (("1", "0"), ("3/2", "-1/2"), ("5/2", "5/2")):
        value = clebsch_gordan(j, m, 0, 0, j, m)
        assert abs(value - 1.0) < 1e-14, f"⟨{j} {m}; 0 0 | {j} {m}⟩ = {value}"
    singlet = clebsch_gordan("1/2", "1/2", "1/2", "-1/2", 0, 0)
    assert abs(singlet - 1 / math.sqrt(2)) < 1e-14, f"singulet = {singlet}"
    triplet = clebsch_gordan(1, 1, 1, 0, 1, 1)
    assert abs(triplet - 1 / math.sqrt(2)) < 1e-14, f"⟨1 1; 1 0 | 1 1⟩ = {triplet}"
    assert clebsch_gordan(1, 1, 1, 0, 1, 0) == 0.0           # M ≠ m1 + m2
    assert clebsch_gordan(1, 1, 1, 1, 1, 2) == 0.0           # |M| > J
    assert clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0           # triangle
    try:
        clebsch_gordan("1/2", 0, 1, 0, "1/2", 0)
    except ValueError:
        pass
    else:
        raise AssertionError("mélange entier/demi-entier accepté")
    print("  ✓ clebsch_gordan : valeurs de référence et sélection")


def test_clebsch_gordan_orthogonality():
    """Σ_{m1} ⟨j1 m1; j2 M−m1 | J M⟩² = 1 pour chaque J permis."""
    j1, j2 = Fraction(3, 2), Fraction(1)
    for M in (Fraction(1, 2), Fraction(-3, 2)):
        for J in (Fraction(1, 2), Fraction(3, 2), Fraction(5, 2)):
            if abs(M) > J:
                continue
            total = sum(
                clebsch_gordan(j1, m1, j2, M - m1, J, M) ** 2
                for m1 in (Fraction(3, 2), Fraction(1, 2), Fraction(-1, 2), Fraction(-3, 2))
                if abs(M - m1) <= j2
            )
            assert abs(total - 1.0) < 1e-13, f"J={J}, M={M} : Σ C² = {total}"
    print("  ✓ clebsch_gordan : orthonormalité")


# ── Test 4 : Jacobi et caractères ─────────────────────────────────────────────

def test_jacobi_poly():
    """P_0 = 1, P_1(0.3) = 0.45, P_4(1) = C(4+1/2, 4)."""
    assert jacobi_poly(0, 0.5, 0.5, 0.7) == 1.0
    assert abs(jacobi_poly(1, 0.5, 0.5, 0.3) - 0.45) < 1e-15
    endpoint = math.gamma(5.5) / (math.gamma(5) * math.gamma(1.5))
    assert abs(jacobi_poly(4, 0.5, 0.5, 1.0) - endpoint) < 1e-12
    values = jacobi_poly(3, 1.5, 1.5, np.array([-0.2, 0.4]))
    assert values.shape == (2,)
    print("  ✓ jacobi_poly")


def test_character_identity():
    """χ^j(η) = sin((2j+1)η/2) / sin(η/2), χ^j(0) = 2j+1."""
    etas = np.linspace(0.1, 2 * math.pi - 0.1, 37)
    for j in SPINS:
        spin = SpinQuantum.parse(j)
        expected = np.sin(spin.dim * etas / 2) / np.sin(etas / 2)
        got = character(j, etas)
        assert np.max(np.abs(got - expected)) < 1e-10, f"j={j} : écart {np.max(np.abs(got - expected))}"
        assert abs(character(j, 0.0) - spin.dim) < 1e-12
    assert abs(character("1/2", math.pi)) < 1e-14
    assert abs(character(1, math.pi / 2) - 1.0) < 1e-14
    print(f"  ✓ character : identité trigonométrique sur {len(SPINS)} spins")


def test_generalized_character():
    """λ=0 redonne χ^j ; λ≥1 s'annule en 0 ; λ=1 par différence finie."""
    etas = np.linspace(0.0, math.pi, 11)
    for j in ("1", "5/2", "4"):
        assert np.max(np.abs(generalized_character(j, 0, etas) - character(j, etas))) < 1e-12
        for lam in range(1, SpinQuantum.parse(j).two_j + 1):
            assert abs(generalized_character(j, lam, 0.0)) < 1e-15

    # χ_1^{1/2} = sqrt(2·0!/3!) · sin(η/2) · dχ^{1/2}/dx, x = cos(η/2), dérivée numérique
    eta, h = math.pi / 2, 1e-6
    x = math.cos(eta / 2)
    derivative = (
        character("1/2", 2 * math.acos(x + h)) - character("1/2", 2 * math.acos(x - h))
    ) / (2 * h)
    expected = math.sqrt(2 / 6) * math.sin(eta / 2) * derivative
    got = generalized_character("1/2", 1, eta)
    assert abs(got - expected) < 1e-8, f"χ_1^(1/2)(π/2) = {got}, attendu {expected}"
    try:
        generalized_character(1, 3, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("λ > 2j accepté")
    print("  ✓ generalized_character")


def test_exact_squares():
    """CG², coefficients de Jacobi et χ_λ² exacts = versions flottantes au carré."""
    for args in [(1, 1, 1, -1, 0, 0), ("3/2", "1/2", 2, 0, "3/2", "1/2"), ("5/2", "-3/2", 3, 0, "5/2", "-3/2")]:
        exact = clebsch_gordan_squared(*args)
        assert isinstance(exact, Fraction)
        assert abs(float(exact) - clebsch_gordan(*args) ** 2) < 1e-14, f"CG² {args}"
    assert clebsch_gordan_squared(1, 1, 1, 1, 0, 0) == 0

    xs = np.linspace(-1.0, 1.0, 9)
    for n, a in [(0, Fraction(1, 2)), (3, Fraction(3, 2)), (6, Fraction(1, 2)), (5, Fraction(7, 2))]:
        coeffs = [float(c) for c in jacobi_coefficients(n, a, a)]
        got = np.polynomial.polynomial.polyval(xs, coeffs)
        assert np.max(np.abs(got - jacobi_poly(n, float(a), float(a), xs))) < 1e-10, f"P_{n}^({a},{a})"

    etas = np.linspace(0.0, math.pi, 13)
    s, c = np.sin(etas / 2) ** 2, np.cos(etas / 2) ** 2
    for two_j in (1, 4, 7, 10):
        for lam in range(two_j + 1):
            coeffs = generalized_character_squared(two_j, lam)
            series = sum(float(b) * s ** k * c ** (two_j - k) for k, b in enumerate(coeffs))
            expected = generalized_character(SpinQuantum(two_j), lam, etas) ** 2
            gap = np.max(np.abs(series - expected))
            bound = 1e-12 * (1.0 + sum(abs(float(b)) for b in coeffs))
            assert gap < bound, f"N={two_j}, λ={lam} : écart {gap:.3e}"
    print("  ✓ carrés exacts (CG², Jacobi, χ_λ²)")


# ── Test 5 : Wigner d et rotations ────────────────────────────────────────────

def test_wigner_small_d():
    """d(0) = I, d^{1/2} explicite, d(θ)·d(−θ) = I."""
    theta = 0.83
    half = wigner_small_d("1/2", theta)
    expected = np.array([
        [math.cos(theta / 2), -math.sin(theta / 2)],
        [math.sin(theta / 2), math.cos(theta / 2)],
    ])
    assert np.max(np.abs(half - expected)) < 1e-15
    for j in SPINS:
        dim = SpinQuantum.parse(j).dim
        assert np.max(np.abs(wigner_small_d(j, 0.0) - np.eye(dim))) < 1e-14
        product = wigner_small_d(j, 1.3) @ wigner_small_d(j, -1.3)
        assert np.max(np.abs(product - np.eye(dim))) < 1e-12, f"j={j} : d(θ)d(−θ) ≠ I"
    print("  ✓ wigner_small_d")


def test_rotation_matrix():
    """R(0) = I, R(2π) = (−1)^N, axe z diagonal, unitarité, axe non unitaire refusé."""
    axis = np.array([1.0, 2.0, -2.0]) / 3.0
    for j in SPINS:
        spin = SpinQuantum.parse(j)
        eye = np.eye(spin.dim)
        assert np.max(np.abs(rotation_matrix(j, 0.0, axis) - eye)) < 1e-12
        full_turn = rotation_matrix(j, 2 * math.pi, axis)
        assert np.max(np.abs(full_turn - (-1) ** spin.two_j * eye)) < 1e-12, f"j={j} : R(2π)"
        r = rotation_matrix(j, 0.77, axis)
        assert np.max(np.abs(r @ r.conj().T - eye)) < 1e-12, f"j={j} : R non unitaire"
        rz = rotation_matrix(j, 0.77, (0, 0, 1))
        assert np.max(np.abs(rz - np.diag(np.exp(-0.77j * spin.m_values())))) < 1e-12
    try:
        rotation_matrix(1, 0.5, (1.0, 1.0, 0.0))
    except ValueError:
        pass
    else:
        raise AssertionError("axe non unitaire accepté")
    print("  ✓ rotation_matrix")


def test_spin_operators():
    """[Jx, Jy] = iJz et J² = j(j+1)."""
    for j in SPINS:
        spin = SpinQuantum.parse(j)
        jx, jy, jz = spin_operators(j)
        assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) < 1e-12, f"j={j} : [Jx,Jy] ≠ iJz"
        casimir = jx @ jx + jy @ jy + jz @ jz
        jj = spin.two_j / 2
        assert np.max(np.abs(casimir - jj * (jj + 1) * np.eye(spin.dim))) < 1e-12
    print("  ✓ spin_operators")


# ── Runner ───────────────────────────────────────────────────────────────────

TESTS = [
    test_spin_parse,
    test_binomial_exact,
    test_clebsch_gordan_values,
    test_clebsch_gordan_orthogonality,
    test_jacobi_poly,
    test_character_identity,
    test_generalized_character,
    test_exact_squares,
    test_wigner_small_d,
    test_rotation_matrix,
    test_spin_operators,
]


def main():
    print(f"Tests fonctions spéciales\n{'─' * 50}")
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
