"""Rotosensor — suite de vérification derrière `roto_client.py verify`.

Chaque contrôle retourne la liste (vide si OK) des échecs, sous la forme
« j=…, η=…, route=… : détail ».
"""

import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from reference_catalog import (
    CRITICAL_ANGLES, ETA0_CLOSED_FORMS, OPTIMAL_REGIMES, critical_coeffs, quoted_tolerance,
    regime_bound,
)
from roto_catalog import build_state, catalog_entries, expected_measures
from roto_fidelity import (
    QuadratureGrid, angular_table, average_fidelity, combinatorial_identity_check,
    dicke_average_fidelity, fidelity_from_measures, fidelity_from_purities, phi, phi_values,
    phi_via_dicke, quadrature_fidelity, reduced_form_fidelity, averaged_variance,
)
from roto_search import critical_angle, eta0_scaling, first_zero_phi1, negativity_window, zeros_of
from roto_specfun import SpinQuantum
from roto_state import (
    AnticoherenceProfile, dicke_state, kappa, mean_spin, measures, profile,
    purities_from_kappa, random_state, rotate,
)

CHECKS = ("oracle", "dicke", "identity", "negativity", "catalog", "reference", "properties")


@dataclass(frozen=True)
class VerifyConfig:
    max_j_oracle: Fraction = Fraction(6)
    max_j_dicke: Fraction = Fraction(10)
    max_j_table: Fraction = Fraction(26)
    max_n_identity: int = 30
    n_states: int = 20
    n_etas: int = 25
    seed: int = 0

    @classmethod
    def capped(cls, max_j) -> "VerifyConfig":
        """Tous les plafonds ramenés à max_j (option --max-j)."""
        j = SpinQuantum.parse(max_j).j
        return cls(j, j, j, max(1, int(2 * j)))


def spins_up_to(max_j, min_j="1/2") -> list[SpinQuantum]:
    lo = SpinQuantum.parse(min_j).two_j
    hi = SpinQuantum.parse(max_j).two_j
    return [SpinQuantum(n) for n in range(lo, hi + 1)]


def _rng(cfg: VerifyConfig, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, *keys]))


# ── Contrôles ───────────────────────────────────────────────────────────────

def check_oracle(cfg: VerifyConfig) -> list[str]:
    """Forme close vs quadrature directe, états aléatoires."""
    failures = []
    for spin in spins_up_to(cfg.max_j_oracle):
        grid = QuadratureGrid.for_degree(spin.two_j)
        for i in range(cfg.n_states):
            rng = _rng(cfg, spin.two_j, i)
            state = random_state(spin, rng.integers(2**32))
            etas = rng.uniform(0, 2 * math.pi, cfg.n_etas)
            closed = average_fidelity(state, etas)
            direct = quadrature_fidelity(state, etas, grid)
            k = int(np.argmax(np.abs(closed - direct)))
            if abs(closed[k] - direct[k]) >= 1e-10:
                failures.append(
                    f"j={spin}, η={etas[k]:.6f}, route=quadrature : écart {abs(closed[k] - direct[k]):.3e}"
                )
    return failures


def check_dicke(cfg: VerifyConfig) -> list[str]:
    """φ_t forme close vs système de Dicke ; F Dicke vs F forme close."""
    failures = []
    etas = np.linspace(0.0, 2 * math.pi, 100)
    for spin in spins_up_to(cfg.max_j_dicke):
        table = angular_table(spin)
        diff = np.abs(phi_values(table, etas) - phi_via_dicke(spin, etas))
        if diff.max() >= 1e-8:
            t, k = np.unravel_index(int(np.argmax(diff)), diff.shape)
            failures.append(f"j={spin}, η={etas[k]:.6f}, route=dicke : φ_{t} écart {diff[t, k]:.3e}")
        if spin.j <= 4:
            sample = etas[::2]
            for i in range(spin.dim):
                m = Fraction(spin.two_j - 2 * i, 2)
                gap = np.abs(dicke_average_fidelity(spin, m, sample)
                             - average_fidelity(dicke_state(spin, m), sample))
                if gap.max() >= 1e-9:
                    failures.append(f"j={spin}, m={m}, route=PDicke : écart {gap.max():.3e}")
    return failures


def check_identity(cfg: VerifyConfig) -> list[str]:
    """Identité combinatoire exacte et b_{t,t} < 0."""
    failures = [
        f"N={n}, k={k}, route=identité : somme ≠ C(2N,N)"
        for n in range(1, cfg.max_n_identity + 1)
        for k in range(n + 1)
        if not combinatorial_identity_check(n, k)
    ]
    for spin in spins_up_to(cfg.max_j_table, "1"):
        table = angular_table(spin)
        for t in range(1, spin.floor_j + 1):
            if not table.b[t][t] < 0:
                failures.append(f"j={spin}, t={t}, route=table : b_tt = {table.b[t][t]} ≥ 0")
            if any(table.b[t][k] != 0 for k in range(t)):
                failures.append(f"j={spin}, t={t}, route=table : b_tk ≠ 0 pour k < t")
    return failures


def check_negativity(cfg: VerifyConfig) -> list[str]:
    failures = []
    for spin in spins_up_to(cfg.max_j_table, "1"):
        if not negativity_window(angular_table(spin)):
            failures.append(f"j={spin}, route=négativité : un φ_t > 0 sur ]0, η₀[")
        if Fraction(5, 2) <= spin.j <= 20:
            scaling = eta0_scaling(spin)
            if not 0.85 <= scaling.ratio <= 1.15:
                failures.append(f"j={spin}, η={scaling.eta0:.6f}, route=η₀ : rapport {scaling.ratio:.4f}")
    return failures


def check_catalog(cfg: VerifyConfig) -> list[str]:
    failures = []
    pairs = list(catalog_entries())
    for n in range(2, 2 * int(cfg.max_j_oracle) + 1):
        pairs += [("cat", SpinQuantum(n)), ("coherent", SpinQuantum(n))]
    for state_id, spin in pairs:
        state = build_state(state_id, spin)
        prof = profile(state)
        if state_id == "cat":
            expected = [Fraction(t + 1, 2 * t) for t in range(1, spin.floor_j + 1)]
        elif state_id == "coherent":
            expected = [Fraction(0)] * spin.floor_j
        else:
            expected = expected_measures(state_id, spin)
        for t, (a, e) in enumerate(zip(prof.measures, expected), start=1):
            if abs(a - float(e)) >= 1e-10:
                failures.append(f"j={spin}, état={state_id}, route=catalogue : A_{t} = {a!r} ≠ {e}")
        failures += [f"j={spin}, état={state_id} : {v}" for v in prof.violations()]
        for t, a in enumerate(prof.measures, start=1):
            if abs(a - 1) < 1e-9 and any(abs(b - 1) >= 1e-9 for b in prof.measures[:t - 1]):
                failures.append(f"j={spin}, état={state_id} : A_{t} = 1 sans les ordres inférieurs")
    return failures


def check_reference(cfg: VerifyConfig) -> list[str]:
    failures = []
    for key, entry in CRITICAL_ANGLES.items():
        coeffs = critical_coeffs(key)
        if coeffs is None:
            continue
        spin = SpinQuantum.parse(entry["j"])
        table = angular_table(spin)
        quoted = float(entry["value"])
        tol = quoted_tolerance(entry["value"])
        zeros = [Fraction(0)] * spin.floor_j
        left = AnticoherenceProfile.from_measures(spin, coeffs)
        right = AnticoherenceProfile.from_measures(spin, zeros)
        angle = critical_angle(table, left, right, (quoted - 0.01, quoted + 0.01))
        if abs(angle.eta_star - quoted) > tol:
            failures.append(f"j={spin}, η={angle.eta_star:.8f}, route={key} : attendu {entry['value']}")
        nth = zeros_of(table, coeffs, entry["zero_index"], step=math.pi / (200 * float(spin.j)))
        if len(nth) < entry["zero_index"] or abs(nth[-1] - angle.eta_star) > 1e-9:
            failures.append(f"j={spin}, route={key} : n'est pas le zéro n°{entry['zero_index']}")
        if "exact" in entry and abs(entry["exact"]() - angle.eta_star) > 1e-9:
            failures.append(f"j={spin}, route={key} : forme exacte {entry['exact']():.12f}")
    for j, forms in ETA0_CLOSED_FORMS.items():
        table = angular_table(j)
        eta0 = first_zero_phi1(table)
        if abs(eta0 - forms["eta0"]()) > 1e-9:
            failures.append(f"j={j}, η={eta0:.12f}, route=η₀ : attendu {forms['eta0']():.12f}")
        value = phi(table, 0, eta0)
        if abs(value - forms["universal"]()) > 1e-9:
            failures.append(f"j={j}, η={eta0:.12f}, route=universel : F = {value:.12f}")
    failures += regime_issues()
    return failures


def regime_issues() -> list[str]:
    """Au milieu de chaque régime, l'état annoncé donne la plus petite F parmi les états du même j."""
    failures = []
    for j, regimes in OPTIMAL_REGIMES.items():
        named = [r for r in regimes if r[0] != "any"]
        if not named:
            continue
        table = angular_table(j)
        candidates = {s: measures(build_state(s, j)) for s, _, _ in named}
        for state_id, lo, hi in named:
            eta = 0.5 * (regime_bound(lo) + regime_bound(hi))
            values = {s: fidelity_from_measures(table, m, eta) for s, m in candidates.items()}
            best = min(values, key=values.get)
            if values[state_id] > values[best] + 1e-12:
                failures.append(
                    f"j={j}, η={eta:.6f}, route=régimes : {state_id} F={values[state_id]:.12f} "
                    f"> {best} F={values[best]:.12f}"
                )
    return failures


def check_properties(cfg: VerifyConfig) -> list[str]:
    failures = []
    for spin in spins_up_to(min(cfg.max_j_oracle, Fraction(10))):
        table = angular_table(spin)
        phi0 = phi_values(table, 0.0)
        if abs(phi0[0] - 1) > 1e-14 or np.any(np.abs(phi0[1:]) > 1e-14):
            failures.append(f"j={spin}, η=0, route=φ(0) : {phi0}")
        for i in range(min(cfg.n_states, 5)):
            rng = _rng(cfg, 1000 + spin.two_j, i)
            state = random_state(spin, rng.integers(2**32))
            prof = profile(state)
            failures += [f"j={spin}, route=profil : {v}" for v in prof.violations()]
            eta = float(rng.uniform(0, math.pi))
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            moved = rotate(state, float(rng.uniform(0, 2 * math.pi)), axis)
            if profile(moved).distance(prof) > 1e-10:
                failures.append(f"j={spin}, route=rotation : profil modifié")
            f = average_fidelity(state, eta)
            checks = {
                "rotation":  average_fidelity(moved, eta),
                "réflexion": average_fidelity(state, 2 * math.pi - eta),
                "puretés":   fidelity_from_purities(state, eta),
                "réduite":   reduced_form_fidelity(state, eta),
            }
            for route, value in checks.items():
                if abs(value - f) > 1e-10:
                    failures.append(f"j={spin}, η={eta:.6f}, route={route} : écart {abs(value - f):.3e}")
            if not -1e-10 <= f <= 1 + 1e-10:
                failures.append(f"j={spin}, η={eta:.6f} : F = {f!r} hors [0, 1]")
            back = purities_from_kappa(kappa(prof))
            if max(abs(a - b) for a, b in zip(back, prof.purities)) > 1e-10:
                failures.append(f"j={spin}, route=κ : aller-retour inexact")
            if spin.floor_j >= 1:
                a1 = 1 - float(np.dot(mean_spin(state), mean_spin(state))) / float(spin.j) ** 2
                if abs(a1 - measures(state)[0]) > 1e-10:
                    failures.append(f"j={spin}, route=⟨J⟩ : A_1 incohérent")
            if spin.j <= 4:
                failures += _small_angle(state)
    return failures


def _small_angle(state) -> list[str]:
    """Reste F − (1 − η²V) d'ordre 4 : rapport ≈ 16 entre h et h/2."""
    v = averaged_variance(state)
    h = 1e-2
    e1 = average_fidelity(state, h) - (1 - h**2 * v)
    e2 = average_fidelity(state, h / 2) - (1 - (h / 2) ** 2 * v)
    if abs(e2) < 1e-15:
        return []
    ratio = e1 / e2
    if abs(ratio - 16) > 0.5:
        return [f"j={state.j}, η={h}, route=petit angle : rapport {ratio:.3f} ≠ 16"]
    return []


CHECK_FUNCTIONS = {
    "oracle":     check_oracle,
    "dicke":      check_dicke,
    "identity":   check_identity,
    "negativity": check_negativity,
    "catalog":    check_catalog,
    "reference":  check_reference,
    "properties": check_properties,
}


def run_checks(checks: list[str], cfg: VerifyConfig) -> dict[str, list[str]]:
    unknown = [c for c in checks if c not in CHECK_FUNCTIONS]
    if unknown:
        raise ValueError(f"Contrôle(s) inconnu(s) : {unknown} (attendu {', '.join(CHECKS)})")
    results = {}
    for name in checks:
        start = time.perf_counter()
        failures = CHECK_FUNCTIONS[name](cfg)
        elapsed = time.perf_counter() - start
        status = "OK" if not failures else f"ÉCHEC ({len(failures)})"
        print(f"[VERIFY] {name:<11} {status:<12} {elapsed:6.1f} s", file=sys.stderr)
        results[name] = failures
    return results
