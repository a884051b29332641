"""Rotosensor — états nommés via state_catalog.yaml."""

import cmath
import math
import re
import unicodedata
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import yaml

from roto_specfun import SpinQuantum, as_doubled
from roto_state import SpinState

DEFAULT_CATALOG_PATH = Path(__file__).parent / "state_catalog.yaml"


class CatalogError(ValueError):
    """Identifiant inconnu ou spin incompatible avec l'état demandé."""


def normalize_state_id(s: str) -> str:
    """Normalise un identifiant d'état pour la recherche.

    Strip, casefold, suppression des accents, séparateurs (- _ .) → espace.
    """
    s = re.sub(r'\s+', ' ', s.strip()).casefold()
    s = unicodedata.normalize('NFD', s)
    s = ''.join(c for c in s if unicodedata.category(c) != 'Mn')
    s = re.sub(r"[\-_\.]", ' ', s)
    return re.sub(r'\s+', ' ', s).strip()


@lru_cache(maxsize=None)
def _load(path: str) -> tuple[dict, dict]:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    entries = data.get("states", {})
    index: dict[str, str] = {}
    for state_id, info in entries.items():
        index[normalize_state_id(state_id)] = state_id
        for alias in info.get("aliases", []):
            index[normalize_state_id(alias)] = state_id
    return entries, index


def load_catalog(path: str | Path = DEFAULT_CATALOG_PATH) -> dict:
    """Retourne {state_id: entrée YAML brute}."""
    return _load(str(path))[0]


def resolve_state_id(name: str, path: str | Path = DEFAULT_CATALOG_PATH) -> str | None:
    return _load(str(path))[1].get(normalize_state_id(name))


def _variant(entry: dict, spin: SpinQuantum) -> dict | None:
    for key, variant in (entry.get("variants") or {}).items():
        if SpinQuantum.parse(key) == spin:
            return variant
    return entry.get("any_j")


def available_spins(state_id: str, path: str | Path = DEFAULT_CATALOG_PATH) -> list[SpinQuantum] | None:
    """Spins pour lesquels l'état est défini (None = tout j)."""
    canonical = resolve_state_id(state_id, path)
    if canonical is None:
        raise CatalogError(f"État inconnu : {state_id!r}")
    entry = load_catalog(path)[canonical]
    if "any_j" in entry:
        return None
    return sorted(SpinQuantum.parse(k) for k in entry.get("variants", {}))


def _component_index(spin: SpinQuantum, m) -> int:
    text = str(m).strip()
    if text in ("j", "+j"):
        tm = spin.two_j
    elif text == "-j":
        tm = -spin.two_j
    else:
        tm = as_doubled(text, "m")
    if abs(tm) > spin.two_j or (spin.two_j - tm) % 2:
        raise CatalogError(f"m={m} invalide pour j={spin}")
    return (spin.two_j - tm) // 2


def build_state(
    state_id: str,
    j,
    chi: float = 0.0,
    path: str | Path = DEFAULT_CATALOG_PATH,
) -> SpinState:
    """Construit l'état exact du catalogue pour le spin j."""
    spin = SpinQuantum.parse(j)
    canonical = resolve_state_id(state_id, path)
    if canonical is None:
        raise CatalogError(f"État inconnu : {state_id!r}")
    variant = _variant(load_catalog(path)[canonical], spin)
    if variant is None:
        spins = ", ".join(str(s) for s in available_spins(canonical, path))
        raise CatalogError(f"État {canonical!r} non défini pour j={spin} (disponible : {spins})")

    amps = np.zeros(spin.dim, dtype=complex)
    for comp in variant["components"]:
        weight = Fraction(str(comp["weight"]))
        phase = comp.get("phase", "0")
        if str(phase) == "chi":
            factor = cmath.exp(1j * chi)
        else:
            factor = cmath.exp(1j * math.pi * Fraction(str(phase)))
        amps[_component_index(spin, comp["m"])] += math.sqrt(weight) * factor

    # exp(iπ) exact : évite un résidu imaginaire de 1e-16
    amps.real[np.abs(amps.real) < 1e-15] = 0.0
    amps.imag[np.abs(amps.imag) < 1e-15] = 0.0
    return SpinState(spin, amps)


def expected_measures(state_id: str, j, path: str | Path = DEFAULT_CATALOG_PATH) -> tuple[Fraction, ...]:
    """Mesures attendues (exactes) déclarées dans le catalogue, éventuellement partielles."""
    spin = SpinQuantum.parse(j)
    canonical = resolve_state_id(state_id, path)
    if canonical is None:
        raise CatalogError(f"État inconnu : {state_id!r}")
    variant = _variant(load_catalog(path)[canonical], spin)
    if variant is None:
        raise CatalogError(f"État {canonical!r} non défini pour j={spin}")
    return tuple(Fraction(str(a)) for a in variant.get("expected_measures", []))


def catalog_entries(path: str | Path = DEFAULT_CATALOG_PATH) -> list[tuple[str, SpinQuantum]]:
    """Paires (state_id, j) à spin fixé, pour la vérification du catalogue."""
    pairs = []
    for state_id, entry in load_catalog(path).items():
        for key in (entry.get("variants") or {}):
            pairs.append((state_id, SpinQuantum.parse(key)))
    return pairs
