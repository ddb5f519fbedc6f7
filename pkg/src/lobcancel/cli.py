"""Command-line front end: parse, rebuild, profile, fit, generate, simulate.

Exit codes: 0 success, 1 input-data errors, 2 usage or configuration errors,
3 internal invariant violations. All artifacts are deterministic for a given
input set and seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import distfit, reportio
from .lob import LobError
from .orderflow import OrderEvent, parse_stream, serialize_events, split_days
from .profiles import (
    EmpiricalPdf,
    InstrumentProfile,
    ProfileRun,
    replay_day,
)
from .synth import (
    ConfigInvalid,
    ExpProfileLaw,
    GenConfig,
    QueueSimConfig,
    TruncLogNormalLaw,
    UniformLaw,
    generate_stream,
    simulate_uniform_queues,
)


class InputDataError(Exception):
    """Bad input files; maps to exit code 1."""


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


ALL_MODELS = ("lognormal", "powerlaw", "exp", "gamma")
DEFAULT_MODELS = "lognormal,powerlaw,exp"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lobcancel",
        description="Rebuild limit-order books from order flow and profile cancellations.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", default=None,
        help="JSON file of flag defaults (explicitly passed flags win)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common],
                       help="parse input files and report structured errors")
    p.add_argument("inputs", nargs="+", help="order-flow CSV files")

    p = sub.add_parser("profile", parents=[common],
                       help="replay streams and emit profiles.json + cancels.csv")
    p.add_argument("inputs", nargs="+", help="order-flow CSV files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--instrument", default=None, help="only profile this instrument code")
    p.add_argument("--bins", type=int, default=50, help="bins for the unit-interval densities")
    p.add_argument("--log-bins", type=int, default=60, help="bins for the normalized-level density")
    p.add_argument("--workers", type=int, default=1, help="process pool size across instruments")

    p = sub.add_parser("fit", parents=[common],
                       help="fit the parametric models to emitted profiles")
    p.add_argument("--profiles", required=True, help="profiles.json from the profile command")
    p.add_argument("--cancels", default=None, help="cancels.csv (default: sibling of profiles)")
    p.add_argument("--out", required=True, help="output fits.json path")
    p.add_argument("--models", default=DEFAULT_MODELS, help=f"comma list from {ALL_MODELS}")
    p.add_argument("--repeats", type=int, default=1000, help="Monte Carlo goodness-of-fit repeats")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic order-flow stream")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--events", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instrument", default="SYN001")
    p.add_argument("--mix", default="0.6,0.2,0.2", help="limit,marketable,cancel shares")
    p.add_argument("--level-law", default="uniform", help="'uniform' or 'lognormal:MU,SIGMA'")
    p.add_argument("--queue-law", default="uniform", help="'uniform' or 'exp:BETA'")
    p.add_argument("--levels", type=int, default=80, help="initial price levels per side")
    p.add_argument("--queue-depth", type=int, default=6, help="initial orders per level")

    p = sub.add_parser("simqueues", parents=[common],
                       help="uniform-queue relative-position experiment")
    p.add_argument("--out", required=True, help="output JSON path")
    p.add_argument("--queues", type=int, default=1_000_000)
    p.add_argument("--max-length", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", parents=[common],
                       help="print a text summary of emitted artifacts")
    p.add_argument("--profiles", required=True)
    p.add_argument("--fits", default=None)

    return parser


def _apply_config_file(args, argv: list[str]) -> None:
    """Fill flags from the JSON config file unless passed on the command line."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise UsageError("config file must hold a JSON object of flag values")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr in ("command", "config", "inputs"):
            raise UsageError(f"config file sets unknown option {key!r}")
        if f"--{key.replace('_', '-')}" not in argv:
            setattr(args, attr, value)


# -- validate -------------------------------------------------------------------


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            return fh.read()
    except OSError as exc:
        raise InputDataError(f"{path}: {exc}") from exc


def cmd_validate(args) -> int:
    total_errors = 0
    for path in args.inputs:
        result = parse_stream(_read_file(path))
        print(f"{path}: {len(result.events)} events, {len(result.errors)} errors")
        for err in result.errors:
            print(f"  {path}:{err}")
        total_errors += len(result.errors)
    return 0 if total_errors == 0 else 1


# -- profile --------------------------------------------------------------------


def _parse_inputs(paths: list[str], instrument: str | None) -> list[OrderEvent]:
    events: list[OrderEvent] = []
    bad = []
    for path in paths:
        result = parse_stream(_read_file(path))
        bad.extend(f"{path}:{err}" for err in result.errors)
        events.extend(result.events)
    if bad:
        raise InputDataError("\n".join(bad))
    if instrument is not None:
        events = [ev for ev in events if ev.instrument == instrument]
    return events


def _profile_instrument(job: tuple[str, list[OrderEvent]]) -> tuple[InstrumentProfile, list]:
    instrument, events = job
    profile = InstrumentProfile(instrument)
    observations = []
    for (_, _day), day_events in sorted(split_days(events).items()):
        day = replay_day(day_events)
        profile.add_day(day)
        observations.extend(day.observations)
    return profile, observations


def _run_profiles(events: list[OrderEvent], workers: int) -> ProfileRun:
    by_instrument: dict[str, list[OrderEvent]] = {}
    for ev in events:
        by_instrument.setdefault(ev.instrument, []).append(ev)
    jobs = [(code, by_instrument[code]) for code in sorted(by_instrument)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_profile_instrument, jobs))
    else:
        results = [_profile_instrument(job) for job in jobs]
    per_instrument = {}
    observations = []
    for profile, obs in results:  # jobs are sorted, so the merge order is fixed
        per_instrument[profile.instrument] = profile
        observations.extend(obs)
    return ProfileRun(per_instrument, observations)


def cmd_profile(args) -> int:
    events = _parse_inputs(args.inputs, args.instrument)
    if not events:
        raise UsageError("empty input: no events to profile")
    run = _run_profiles(events, args.workers)
    os.makedirs(args.out, exist_ok=True)
    payload = reportio.profiles_payload(run, unit_bins=args.bins, log_bins=args.log_bins)
    reportio.write_text(os.path.join(args.out, "profiles.json"), reportio.render_json(payload))
    reportio.write_text(os.path.join(args.out, "cancels.csv"), reportio.cancels_csv(run.observations))
    n_cancels = sum(1 for o in run.observations if o.in_profile)
    print(
        f"profiled {len(events)} events, {len(run.per_instrument)} instrument(s), "
        f"{n_cancels} in-profile cancellations -> {args.out}"
    )
    return 0


# -- fit -------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputDataError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputDataError(f"{path}: not valid JSON: {exc}") from exc


def _pdf_from_payload(payload: dict | None, where: str) -> EmpiricalPdf | None:
    if payload is None:
        return None
    try:
        return EmpiricalPdf(
            bin_edges=np.asarray(payload["edges"], float),
            density=np.asarray(payload["density"], float),
            count=int(payload["count"]),
            domain=str(payload["domain"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputDataError(f"schema error at {where}: {exc!r}") from exc


def _load_norm_level_samples(path: str) -> dict[tuple[str, str], list[float]]:
    """Raw normalized-level samples per (instrument, side) from cancels.csv."""
    samples: dict[tuple[str, str], list[float]] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                if row["in_profile"] != "1":
                    continue
                value = float(row["norm_level"])
                samples.setdefault((row["instrument"], row["side"]), []).append(value)
    except OSError as exc:
        raise InputDataError(f"{path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise InputDataError(f"{path}: bad cancels schema: {exc!r}") from exc
    return samples


def _entry_seed(base_seed: int, instrument: str, side: str, model: str) -> int:
    return base_seed ^ zlib.crc32(f"{instrument}|{side}|{model}".encode())


def _fit_entry(
    instrument: str,
    side: str,
    sides_payload: dict,
    models: list[str],
    norm_samples: dict | None,
    repeats: int,
    seed: int,
) -> list[dict]:
    where = f"$.sides.{side} of {instrument}"
    out: list[dict] = []
    side_data = sides_payload[side]

    def record(model: str, params: dict | None, error: str | None = None) -> None:
        entry = {"instrument": instrument, "side": side, "model": model}
        if error is None:
            entry["params"] = params
        else:
            entry["error"] = error
        out.append(entry)

    for model in models:
        try:
            if model == "lognormal":
                pdf = _pdf_from_payload(side_data.get("pdf_rel_level"), where)
                if pdf is None:
                    record(model, None, "no relative-level density")
                    continue
                fit = distfit.fit_lognormal_lsq(pdf)
                p = distfit.gof_pvalue_mc(
                    pdf, fit, repeats=repeats, seed=_entry_seed(seed, instrument, side, model)
                )
                record(
                    model,
                    {
                        "mu": fit.mu,
                        "sigma": fit.sigma,
                        "unit_mass": fit.unit_mass,
                        "rms": fit.rms,
                        "p_value": p,
                        "repeats": repeats,
                    },
                )
            elif model == "gamma":
                pdf = _pdf_from_payload(side_data.get("pdf_rel_level"), where)
                if pdf is None:
                    record(model, None, "no relative-level density")
                    continue
                fit = distfit.fit_gamma_lsq(pdf)
                record(
                    model,
                    {"shape": fit.shape, "scale": fit.scale, "unit_mass": fit.unit_mass, "rms": fit.rms},
                )
            elif model == "exp":
                pdf = _pdf_from_payload(side_data.get("pdf_queue_frac"), where)
                if pdf is None:
                    record(model, None, "no queue-position density")
                    continue
                fit = distfit.fit_exp_profile(pdf)
                record(model, {"beta": fit.beta, "norm": fit.norm, "rms": fit.rms})
            elif model == "powerlaw":
                if norm_samples is None:
                    record(model, None, "cancels.csv with raw samples not available")
                    continue
                xs = norm_samples.get((instrument, "B" if side == "buy" else "S"), [])
                if instrument == "__ensemble__":
                    key = "B" if side == "buy" else "S"
                    xs = [v for (_, s), vals in norm_samples.items() if s == key for v in vals]
                fit = distfit.fit_powerlaw_tail(xs)
                record(
                    model,
                    {
                        "alpha": fit.alpha,
                        "xmin": fit.xmin,
                        "tail_size": fit.tail_size,
                        "stderr": fit.stderr,
                        "ks": fit.ks,
                    },
                )
        except distfit.FitError as exc:
            record(model, None, f"{type(exc).__name__}: {exc}")
    return out


def cmd_fit(args) -> int:
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = [m for m in models if m not in ALL_MODELS]
    if unknown:
        raise UsageError(f"unknown models {unknown}; choose from {ALL_MODELS}")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    payload = _load_json(args.profiles)
    if payload.get("kind") != "profiles":
        raise InputDataError(f"schema error at $.kind in {args.profiles}: expected 'profiles'")
    try:
        instruments = list(payload["instruments"])
        ensemble = payload["ensemble"]
    except (KeyError, TypeError) as exc:
        raise InputDataError(f"schema error at $.instruments/$.ensemble: {exc!r}") from exc

    norm_samples = None
    if "powerlaw" in models:
        cancels_path = args.cancels or os.path.join(os.path.dirname(args.profiles), "cancels.csv")
        norm_samples = _load_norm_level_samples(cancels_path) if os.path.exists(cancels_path) else None

    entries: list[dict] = []
    for block in instruments + [ensemble]:
        try:
            instrument = block["instrument"]
            sides = block["sides"]
        except (KeyError, TypeError) as exc:
            raise InputDataError(f"schema error at $.instruments[].sides: {exc!r}") from exc
        for side in ("buy", "sell"):
            if side not in sides:
                raise InputDataError(f"schema error at $.sides.{side} of {instrument}: missing")
            entries.extend(
                _fit_entry(instrument, side, sides, models, norm_samples, args.repeats, args.seed)
            )
    config = {"models": models, "repeats": args.repeats, "seed": args.seed}
    reportio.write_text(args.out, reportio.render_json(reportio.fits_payload(entries, config)))
    failed = sum(1 for e in entries if "error" in e)
    print(f"wrote {len(entries)} fit entries ({failed} failed) -> {args.out}")
    return 0


# -- gen ---------------------------------------------------------------------------


def _parse_law(text: str, which: str):
    text = text.strip().lower()
    if text == "uniform":
        return UniformLaw()
    if text.startswith("lognormal:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise UsageError(f"{which}: expected lognormal:MU,SIGMA")
        return TruncLogNormalLaw(float(parts[0]), float(parts[1]))
    if text.startswith("exp:"):
        return ExpProfileLaw(float(text.split(":", 1)[1]))
    raise UsageError(f"{which}: unknown law {text!r}")


def cmd_gen(args) -> int:
    try:
        mix = tuple(float(v) for v in args.mix.split(","))
        if len(mix) != 3:
            raise ValueError
    except ValueError:
        raise UsageError("--mix expects three comma-separated shares") from None
    config = GenConfig(
        seed=args.seed,
        n_events=args.events,
        instrument=args.instrument,
        level_law=_parse_law(args.level_law, "--level-law"),
        queue_law=_parse_law(args.queue_law, "--queue-law"),
        limit_share=mix[0],
        marketable_share=mix[1],
        cancel_share=mix[2],
        initial_levels=args.levels,
        initial_queue=args.queue_depth,
    )
    events = generate_stream(config)
    reportio.write_text(args.out, serialize_events(events))
    print(f"wrote {len(events)} events -> {args.out}")
    return 0


# -- simqueues -----------------------------------------------------------------------


def cmd_simqueues(args) -> int:
    config = QueueSimConfig(n_queues=args.queues, max_length=args.max_length, seed=args.seed)
    result = simulate_uniform_queues(config)
    payload = {
        "schema_version": reportio.SCHEMA_VERSION,
        "kind": "queue_sim",
        "config": {
            "n_queues": config.n_queues,
            "max_length": config.max_length,
            "seed": config.seed,
        },
        "point_masses": {
            "value": [float(v) for v in result.mass_values],
            "prob": [float(p) for p in result.mass_probs],
        },
        "top_masses": [[v, p] for v, p in result.top_masses(10)],
        "pdf": result.pdf.to_dict(),
    }
    reportio.write_text(args.out, reportio.render_json(payload))
    print(f"simulated {config.n_queues} queues -> {args.out}")
    return 0


# -- report --------------------------------------------------------------------------


def _fmt_ratio(r: float | None) -> str:
    return "n/a" if r is None else f"{100.0 * r:.1f}%"


def cmd_report(args) -> int:
    payload = _load_json(args.profiles)
    if payload.get("kind") != "profiles":
        raise InputDataError(f"schema error at $.kind in {args.profiles}")
    print("instrument  side  orders  cancelled  r      r1     r2     r3     r4")
    for block in payload.get("instruments", []) + [payload.get("ensemble")]:
        if not block:
            continue
        for side in ("buy", "sell"):
            data = block["sides"][side]
            ratios = [
                data["class_ratios"][k]["ratio"]
                for k in ("partially_filled", "inside_spread", "at_best", "inside_book")
            ]
            cells = "  ".join(f"{_fmt_ratio(r):<5}" for r in ratios)
            print(
                f"{block['instrument']:<11} {side:<5} {data['orders']:<7} "
                f"{data['cancelled_orders']:<10} {_fmt_ratio(data['ratio']):<6} {cells}"
            )
    if args.fits:
        fits = _load_json(args.fits)
        print("\nfits:")
        for entry in fits.get("fits", []):
            label = f"{entry['instrument']}/{entry['side']}/{entry['model']}"
            if "error" in entry:
                print(f"  {label}: ERROR {entry['error']}")
            else:
                params = ", ".join(f"{k}={v:.4g}" for k, v in sorted(entry["params"].items()))
                print(f"  {label}: {params}")
    return 0


# -- dispatch ---------------------------------------------------------------------------


_COMMANDS = {
    "validate": cmd_validate,
    "profile": cmd_profile,
    "fit": cmd_fit,
    "gen": cmd_gen,
    "simqueues": cmd_simqueues,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, list(argv) if argv is not None else sys.argv[1:])
        return _COMMANDS[args.command](args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ConfigInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LobError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
