"""Rotosensor — CLI : mesures, φ_t, fidélité, optimisation, balayages, vérification.

Codes de sortie : 0 OK, 1 vérification en échec, 2 usage, 3 invariant
(état/catalogue/intervalle), 4 enregistrement incohérent.

Configuration : option > fichier --config (clé=valeur) > .env > défaut.
"""

import argparse
import json
import math
import os
import re
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
from dotenv import dotenv_values, load_dotenv

from reference_catalog import CRITICAL_ANGLES, angles_for, critical_coeffs, format_angle
from roto_catalog import CatalogError, build_state, resolve_state_id
from roto_db import get_or_create_sweep, init_db, save_record, set_manifest, stored_for_grid
from roto_export import (
    build_record, build_sweep_export, build_verify_export, critical_rows, curve_rows, fmt,
    sweep_rows, table_rows, verify_rows, write_csv, write_export,
)
from roto_fidelity import (
    ROUTES, SingularSystemError, angular_table, fidelity_curve, phi, phi_via_dicke,
)
from roto_search import (
    BracketError, SearchConfig, critical_angle, maximize_fidelity, minimize_fidelity,
    record_issues, solve_transitions, sweep,
)
from roto_specfun import SpinQuantum
from roto_state import AnticoherenceProfile, SpinState, StateError, profile, random_state
from roto_verify import CHECKS, VerifyConfig, run_checks

load_dotenv()

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INVARIANT, EXIT_CONSISTENCY = 0, 1, 2, 3, 4


def _env_int(key: str, default: int) -> int:
    value = os.getenv(key)
    if value is None or value.strip() == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"Variable invalide dans .env : {key}={value}") from None


# ── Parsing des arguments ───────────────────────────────────────────────────

_FACTOR = re.compile(r"([-+]?(?:\d+\.?\d*|\.\d+)(?:e[-+]?\d+)?|[-+])?(pi)?")


def parse_angle(text: str) -> float:
    """Radians, avec « pi » littéral : "2.3", "pi", "3pi/4", "pi*0.75", "-pi/2"."""
    s = str(text).strip().lower().replace("π", "pi").replace(" ", "")
    parts = re.split(r"([*/])", s)
    if not s or parts[0] == "" or any(p == "" for p in parts):
        raise argparse.ArgumentTypeError(f"Angle illisible : {text!r}")
    value, op = 1.0, "*"
    for part in parts:
        if part in ("*", "/"):
            op = part
            continue
        m = _FACTOR.fullmatch(part)
        if m is None or not (m.group(1) or m.group(2)):
            raise argparse.ArgumentTypeError(f"Angle illisible : {text!r}")
        number = m.group(1)
        if number in ("-", "+"):
            if not m.group(2):
                raise argparse.ArgumentTypeError(f"Angle illisible : {text!r}")
            number += "1"
        factor = (float(number) if number else 1.0) * (math.pi if m.group(2) else 1.0)
        if op == "/" and factor == 0:
            raise argparse.ArgumentTypeError(f"Division par zéro : {text!r}")
        value = value * factor if op == "*" else value / factor
    return value


def parse_grid(text: str) -> np.ndarray:
    """start:stop:count, bornes incluses, count ≥ 2."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"Grille attendue start:stop:count, reçu {text!r}")
    try:
        count = int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"Nombre de points illisible : {parts[2]!r}") from None
    if count < 2:
        raise argparse.ArgumentTypeError(f"La grille demande au moins 2 points (reçu {count})")
    return np.linspace(parse_angle(parts[0]), parse_angle(parts[1]), count)


def parse_bracket(text: str) -> tuple[float, float]:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"Intervalle attendu lo:hi, reçu {text!r}")
    return parse_angle(parts[0]), parse_angle(parts[1])


def parse_spin(text: str) -> SpinQuantum:
    try:
        return SpinQuantum.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_measures(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Mesures illisibles : {text!r}") from None


def load_state(source: str, spin: SpinQuantum, chi: float = 0.0) -> SpinState:
    """Catalogue | fichier JSON | liste d'amplitudes "1,0,0" | random:SEED."""
    text = source.strip()
    if text.startswith("random:"):
        try:
            seed = int(text.split(":", 1)[1])
        except ValueError:
            raise StateError(f"Graine illisible : {text!r}") from None
        return random_state(spin, seed)
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        state = SpinState.from_json(path.read_text(encoding="utf-8"))
        if state.j != spin:
            raise StateError(f"Le fichier décrit j={state.j}, attendu j={spin}")
        return state
    if "," in text or resolve_state_id(text) is None and _is_number(text):
        try:
            amps = [complex(tok.replace(" ", "")) for tok in text.split(",")]
        except ValueError:
            raise StateError(f"Amplitudes illisibles : {text!r}") from None
        return SpinState(spin, np.array(amps))
    return build_state(text, spin, chi=chi)


def _is_number(text: str) -> bool:
    try:
        complex(text)
    except ValueError:
        return False
    return True


# ── Sorties ─────────────────────────────────────────────────────────────────

def _emit_json(data: dict, path: str | None, pretty: bool = True) -> None:
    if path is None:
        print(json.dumps(data, ensure_ascii=False, indent=2 if pretty else None))
    else:
        write_export(data, path, pretty=pretty)


def _emit_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(f"[EXPORT] {out}", file=sys.stderr)


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        restarts=args.restarts,
        max_iter=args.max_iter,
        seed=args.seed,
        threads=args.threads,
        warm_start=not getattr(args, "no_warm_start", False),
    )


def _etas(args) -> np.ndarray | None:
    if getattr(args, "grid", None) is not None:
        return parse_grid(args.grid) if isinstance(args.grid, str) else args.grid
    if getattr(args, "eta", None) is not None:
        return None
    raise ValueError("Préciser --eta ou --grid")


# ── Sous-commandes ──────────────────────────────────────────────────────────

def cmd_measures(args) -> int:
    state = load_state(args.state, args.j, args.chi)
    prof = profile(state)
    issues = prof.violations()
    if args.format == "json":
        _emit_json({"j": str(args.j), "measures": list(prof.measures),
                    "purities": list(prof.purities)}, args.output)
    elif args.format == "csv":
        rows = [[str(t), fmt(p), fmt(prof.measures[t - 1]) if 1 <= t <= args.j.floor_j else ""]
                for t, p in enumerate(prof.purities)]
        write_csv(["t", "purity", "measure"], rows, args.output)
    else:
        if not prof.measures:
            print(f"A : (vide) — tout état de spin j={args.j} est cohérent")
        else:
            print("A : " + ", ".join(fmt(a) for a in prof.measures))
        print("tr ρ_t² : " + ", ".join(fmt(p) for p in prof.purities))
    if issues:
        for issue in issues:
            print(f"[ERROR] {issue}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_phi(args) -> int:
    if not 0 <= args.t <= args.j.floor_j:
        print(f"[ERROR] t={args.t} hors domaine [0, {args.j.floor_j}] pour j={args.j}", file=sys.stderr)
        return EXIT_USAGE
    etas = _etas(args)
    points = np.array([args.eta]) if etas is None else etas
    if args.route == "dicke":
        values = phi_via_dicke(args.j, points)[args.t]
    else:
        values = np.atleast_1d(phi(angular_table(args.j), args.t, points))
    if etas is None and args.format == "plain":
        print(fmt(values[0]))
        return EXIT_OK
    header, rows = curve_rows(points, {args.route: values})
    write_csv(header, rows, args.output)
    return EXIT_OK


def cmd_fidelity(args) -> int:
    state = load_state(args.state, args.j, args.chi)
    etas = _etas(args)
    points = np.array([args.eta]) if etas is None else etas
    routes = ["closed", "quadrature"] if args.route == "both" else [args.route]
    curves = {route: fidelity_curve(state, points, route) for route in routes}
    if etas is None and args.format == "plain":
        for route in routes:
            print(f"{route:<10} {fmt(curves[route][0])}")
        if len(routes) == 2:
            print(f"{'écart':<10} {fmt(abs(curves['closed'][0] - curves['quadrature'][0]))}")
        return EXIT_OK
    header, rows = curve_rows(points, curves)
    write_csv(header, rows, args.output)
    return EXIT_OK


def _print_record(record, spin: SpinQuantum) -> None:
    print(f"F = {fmt(record.best_value)}  (η = {fmt(record.eta)}, j = {spin}, {record.mode})")
    print("A : " + ", ".join(fmt(a) for a in record.profile.measures))
    print(f"départs sur l'optimum : {record.restarts_hitting_best}, "
          f"évaluations : {record.n_evaluations}, convergé : {record.converged}")


def cmd_optimize(args) -> int:
    cfg = _search_config(args)
    optimize = maximize_fidelity if args.maximize else minimize_fidelity
    record = optimize(args.j, args.eta, cfg)
    print(f"[OPTIM] j={args.j} η={record.eta:.6f} F={record.best_value:.9f}", file=sys.stderr)
    if args.format == "json":
        _emit_json({"format": 1, "j": str(args.j), "record": build_record(record)}, args.output)
    elif args.format == "csv":
        write_csv(*sweep_rows([record]), args.output)
    else:
        _print_record(record, args.j)
    issues = record_issues(record)
    for issue in issues:
        print(f"[ERROR] {issue}", file=sys.stderr)
    return EXIT_CONSISTENCY if issues else EXIT_OK


def _read_spins_file(path: str) -> list[SpinQuantum]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    return [SpinQuantum.parse(l.strip()) for l in lines if l.strip() and not l.startswith("#")]


def _sweep_one(args, spin: SpinQuantum, etas: np.ndarray, cfg: SearchConfig,
               csv_path: str | None, json_path: str | None) -> int:
    mode = "max" if args.maximize else "min"
    stored, on_record = None, None
    if args.db:
        init_db(args.db)
        sweep_id = get_or_create_sweep(spin.two_j, mode, cfg, args.db)
        stored = stored_for_grid(sweep_id, [float(e) for e in etas], args.db)
        set_manifest(f"grid::{sweep_id}", args.grid if isinstance(args.grid, str) else "", args.db)

        def on_record(index, record):
            save_record(sweep_id, index, record, args.db)

    records = sweep(spin, etas, cfg, maximize=args.maximize, stored=stored, on_record=on_record)
    angles, unresolved = solve_transitions(angular_table(spin), records)
    for a in angles:
        print(f"[CRITICAL] j={spin} η* = {a.eta_star:.8f} sur [{a.bracket[0]:.6f}, {a.bracket[1]:.6f}]",
              file=sys.stderr)
    print(f"[SWEEP] j={spin} — {len(records)} points, {len(angles)} transition(s) résolue(s), "
          f"{len(unresolved)} sans changement de signe", file=sys.stderr)

    write_csv(*sweep_rows(records), csv_path)
    if json_path:
        write_export(build_sweep_export(spin, records, cfg, mode, angles, unresolved), json_path)

    issues = [i for r in records for i in record_issues(r)]
    for issue in issues:
        print(f"[ERROR] j={spin} {issue}", file=sys.stderr)
    return EXIT_CONSISTENCY if issues else EXIT_OK


def cmd_sweep(args) -> int:
    etas = parse_grid(args.grid) if isinstance(args.grid, str) else args.grid
    cfg = _search_config(args)
    if args.spins_file:
        spins = _read_spins_file(args.spins_file)
        out_dir = Path(args.output or "results")
        print(f"\n[SWEEP] {args.spins_file} — {len(spins)} spin(s)", file=sys.stderr)
        results = []
        for spin in spins:
            stem = f"sweep_{args.mode_label}_j{spin.two_j}o2"
            try:
                code = _sweep_one(args, spin, etas, cfg, str(out_dir / f"{stem}.csv"),
                                  str(out_dir / f"{stem}.json"))
            except (StateError, CatalogError, ValueError) as exc:
                print(f"[ERROR] j={spin} : {exc}", file=sys.stderr)
                code = EXIT_INVARIANT
            results.append((spin, code))
        ok = [s for s, c in results if c == EXIT_OK]
        print(f"\n[SWEEP] Résumé : {len(ok)}/{len(results)} OK", file=sys.stderr)
        for spin, code in results:
            print(f"  {'✓' if code == EXIT_OK else '✗'} j={spin} (code {code})", file=sys.stderr)
        return max((c for _, c in results), default=EXIT_OK)
    if args.j is None:
        print("[ERROR] Préciser --j ou --spins-file", file=sys.stderr)
        return EXIT_USAGE
    return _sweep_one(args, args.j, etas, cfg, args.output, args.json)


def cmd_critical(args) -> int:
    table = angular_table(args.j)
    if args.reference:
        keys = angles_for(str(args.j))
        if not keys:
            print(f"[ERROR] Aucun angle publié pour j={args.j}", file=sys.stderr)
            return EXIT_USAGE
        angles = []
        for key in keys:
            coeffs = critical_coeffs(key)
            if coeffs is None:
                print(f"[WARNING] {format_angle(key)} : frontière sans équation, ignorée", file=sys.stderr)
                continue
            quoted = float(CRITICAL_ANGLES[key]["value"])
            left = AnticoherenceProfile.from_measures(args.j, coeffs)
            right = AnticoherenceProfile.from_measures(args.j, [0] * args.j.floor_j)
            angle = critical_angle(table, left, right, (quoted - 0.01, quoted + 0.01))
            print(f"[CRITICAL] {format_angle(key)} → {angle.eta_star:.8f}", file=sys.stderr)
            angles.append(angle)
    else:
        if args.bracket is None:
            print("[ERROR] --bracket lo:hi requis (ou --reference)", file=sys.stderr)
            return EXIT_USAGE
        left, right = _profile_pair(args)
        angles = [critical_angle(table, left, right, args.bracket)]
    if args.format == "plain":
        for a in angles:
            print(f"η* = {fmt(a.eta_star)}  résidu {a.residual:.2e}")
        return EXIT_OK
    write_csv(*critical_rows(angles), args.output)
    return EXIT_OK


def _profile_pair(args) -> tuple[AnticoherenceProfile, AnticoherenceProfile]:
    if args.measures is not None and args.versus_measures is not None:
        return (AnticoherenceProfile.from_measures(args.j, args.measures),
                AnticoherenceProfile.from_measures(args.j, args.versus_measures))
    if args.state is None or args.versus is None:
        raise ValueError("Préciser --state/--versus ou --measures/--versus-measures")
    return (profile(load_state(args.state, args.j, args.chi)),
            profile(load_state(args.versus, args.j, args.chi)))


def cmd_table(args) -> int:
    write_csv(*table_rows(angular_table(args.j)), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = VerifyConfig() if args.max_j is None else VerifyConfig.capped(args.max_j)
    cfg = VerifyConfig(cfg.max_j_oracle, cfg.max_j_dicke, cfg.max_j_table,
                       cfg.max_n_identity, args.states, cfg.n_etas, args.seed)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    results = run_checks(checks, cfg)
    failed = {name: f for name, f in results.items() if f}
    if args.format == "json":
        _emit_json(build_verify_export(results, asdict(cfg)), args.output)
    elif args.format == "csv":
        write_csv(*verify_rows(results), args.output)
    else:
        lines = [f"\n{'=' * 50}"]
        lines += [f"  {'✓' if not failures else '✗'} {name}" for name, failures in results.items()]
        for name, failures in failed.items():
            lines += [f"[ERROR] {name} — {failure}" for failure in failures[:20]]
        if failed:
            lines.append(f"\n❌ {len(failed)}/{len(results)} contrôle(s) en échec")
        else:
            lines.append(f"\n✅ {len(results)}/{len(results)} contrôles passent")
        _emit_text("\n".join(lines) + "\n", args.output)
    return EXIT_VERIFY if failed else EXIT_OK


# ── Parser ──────────────────────────────────────────────────────────────────

def _common(require_j: bool = True) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--j", type=parse_spin, required=require_j, default=None,
                        help="Spin j (\"5/2\", \"3\")")
    common.add_argument("--format", choices=("plain", "csv", "json"), default="plain")
    common.add_argument("--output", default=None, metavar="PATH",
                        help="Fichier de sortie (défaut : stdout)")
    common.add_argument("--config", default=None, metavar="PATH",
                        help="Fichier clé=valeur (mêmes noms que les options)")
    return common


def _state_options(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--state", required=required, default=None,
                   help="Id du catalogue, fichier JSON, amplitudes \"1,0,0\" ou random:SEED")
    p.add_argument("--chi", type=float, default=0.0, help="Phase χ (états paramétrés)")


def _search_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, default=_env_int("ROTOSENSOR_RESTARTS", 64))
    p.add_argument("--max-iter", type=int, default=_env_int("ROTOSENSOR_MAXITER", 2000))
    p.add_argument("--seed", type=int, default=_env_int("ROTOSENSOR_SEED", 0))
    p.add_argument("--threads", type=int, default=_env_int("ROTOSENSOR_THREADS", 1),
                   help="Plafond de threads pour les départs (gain limité par le GIL)")
    p.add_argument("--maximize", action="store_true", help="Maximiser au lieu de minimiser")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(description="Rotosenseurs quantiques optimaux")
    sub = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("measures", parents=[_common()], help="Mesures A_t et puretés")
    _state_options(p)
    p.set_defaults(handler=cmd_measures)
    subs["measures"] = p

    p = sub.add_parser("phi", parents=[_common()], help="Fonction angulaire φ_t(η)")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--eta", type=parse_angle, default=None)
    p.add_argument("--grid", default=None, metavar="START:STOP:COUNT")
    p.add_argument("--route", choices=("closed", "dicke"), default="closed")
    p.set_defaults(handler=cmd_phi)
    subs["phi"] = p

    p = sub.add_parser("fidelity", parents=[_common()], help="Fidélité moyenne F(η)")
    _state_options(p)
    p.add_argument("--eta", type=parse_angle, default=None)
    p.add_argument("--grid", default=None, metavar="START:STOP:COUNT")
    p.add_argument("--route", choices=ROUTES + ("both",), default="closed")
    p.set_defaults(handler=cmd_fidelity)
    subs["fidelity"] = p

    p = sub.add_parser("optimize", parents=[_common()], help="État optimal à η fixé")
    p.add_argument("--eta", type=parse_angle, required=True)
    _search_options(p)
    p.set_defaults(handler=cmd_optimize)
    subs["optimize"] = p

    p = sub.add_parser("sweep", parents=[_common(require_j=False)], help="Balayage en η")
    p.add_argument("--grid", required=True, metavar="START:STOP:COUNT")
    p.add_argument("--spins-file", default=None, metavar="PATH",
                   help="Fichier texte : un j par ligne")
    p.add_argument("--db", default=os.getenv("ROTOSENSOR_DB") or None, metavar="PATH",
                   help="Cache SQLite (reprise des points déjà calculés)")
    p.add_argument("--json", default=None, metavar="PATH", help="Export JSON complet")
    p.add_argument("--no-warm-start", action="store_true")
    _search_options(p)
    p.set_defaults(handler=cmd_sweep)
    subs["sweep"] = p

    p = sub.add_parser("critical", parents=[_common()], help="Angle critique entre deux profils")
    _state_options(p, required=False)
    p.add_argument("--versus", default=None)
    p.add_argument("--measures", type=parse_measures, default=None)
    p.add_argument("--versus-measures", type=parse_measures, default=None)
    p.add_argument("--bracket", type=parse_bracket, default=None, metavar="LO:HI")
    p.add_argument("--reference", action="store_true", help="Tous les angles publiés pour j")
    p.set_defaults(handler=cmd_critical)
    subs["critical"] = p

    p = sub.add_parser("table", parents=[_common()], help="Table b_{t,k} exacte (CSV)")
    p.set_defaults(handler=cmd_table)
    subs["table"] = p

    p = sub.add_parser("verify", parents=[_common(require_j=False)], help="Suite de vérification")
    p.add_argument("--max-j", default=None, help="Plafond commun de j")
    p.add_argument("--checks", default=",".join(CHECKS), help=f"Parmi {','.join(CHECKS)}")
    p.add_argument("--states", type=int, default=20, help="États aléatoires par j")
    p.add_argument("--seed", type=int, default=_env_int("ROTOSENSOR_SEED", 0))
    p.set_defaults(handler=cmd_verify)
    subs["verify"] = p

    return parser, subs


def _apply_config(path: str, subs: dict[str, argparse.ArgumentParser]) -> None:
    """Valeurs du fichier --config en défauts des sous-commandes (les options gagnent)."""
    values = dotenv_values(path)
    for key, value in values.items():
        dest = key.strip().lstrip("-").replace("-", "_")
        known = False
        for p in subs.values():
            for action in p._actions:
                if action.dest != dest:
                    continue
                known = True
                if action.nargs == 0:
                    p.set_defaults(**{dest: str(value).lower() in ("1", "true", "yes", "on")})
                else:
                    p.set_defaults(**{dest: value})
        if not known:
            print(f"[WARNING] Clé de configuration inconnue ignorée : {key}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser, subs = build_parser()
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config", default=None)
        known, _ = pre.parse_known_args(argv)
        if known.config:
            if not Path(known.config).is_file():
                print(f"[ERROR] Fichier de configuration introuvable : {known.config}", file=sys.stderr)
                return EXIT_USAGE
            _apply_config(known.config, subs)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_USAGE

    args.mode_label = "max" if getattr(args, "maximize", False) else "min"
    try:
        return args.handler(args)
    except (StateError, CatalogError, BracketError, SingularSystemError) as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
