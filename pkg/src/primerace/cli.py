"""Command-line front end: sieve -> tally -> analysis pipelines.

Every subcommand reads one effective configuration assembled from (in
rising precedence) built-in defaults, an optional key=value config file,
and command-line flags.  Reports are CSV/JSON only and deterministic:
identical configuration and inputs give byte-identical files regardless
of the thread count, so no timestamps, hostnames, or paths are embedded.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import (
    SampleSeries,
    calibrate_K,
    delta_exact,
    delta_zero_sum,
    density_race,
    envelope_check,
    estimate_C,
    estimate_C_all,
    estimate_ell,
    euler_density_check,
    euler_series,
    fit_moment_constant,
    mean_integral,
    mean_values,
    moment,
    race_jump_weights,
    race_series,
    rms_window,
    weighted_second_moment,
)
from .characters import bias_constant, character_by_label, race_weight
from .ingest import load_zeros, symmetric_expand
from .sieve import DEFAULT_SEGMENT_ODDS
from .tally import CheckpointGrid, accumulate

__all__ = ["RunConfig", "UsageError", "main",
           "cmd_bias", "cmd_euler", "cmd_delta", "cmd_moments", "cmd_mean",
           "cmd_zeros_validate"]


class UsageError(ValueError):
    """Bad flags, bad config values, impossible requests: exit code 2."""


@dataclass
class RunConfig:
    """One pipeline invocation's worth of settings."""

    q: int = 4
    a: int = 3
    b: int = 1
    x_max: float = 1_000_000.0
    h: float = 0.01
    zeros: str | None = None
    chi: str | None = None
    mchi: dict[str, int] = field(default_factory=dict)
    eps: float = 0.5
    K: float | None = None
    tail_fraction: float = 0.25
    T_values: tuple[float, ...] = ()
    k_values: tuple[int, ...] = (1, 2, 3)
    threads: int = 1
    segment_odds: int = DEFAULT_SEGMENT_ODDS
    out: str = "."
    resume: bool = False
    finite_size: bool = True

    def validate(self) -> None:
        if self.q < 3:
            raise UsageError(f"modulus must be at least 3, got {self.q}")
        if math.gcd(self.a, self.q) != 1 or math.gcd(self.b, self.q) != 1:
            raise UsageError(
                f"race classes must be units mod {self.q}, got a={self.a} b={self.b}")
        if self.a % self.q == self.b % self.q:
            raise UsageError(f"race needs two distinct classes, got a=b={self.a}")
        if self.x_max < 100:
            raise UsageError(f"xmax must be at least 100, got {self.x_max}")
        if not (0 < self.h <= 0.1):
            raise UsageError(f"grid spacing must lie in (0, 0.1], got {self.h}")
        if not (0 < self.tail_fraction <= 0.5):
            raise UsageError(f"tail fraction must lie in (0, 0.5], got {self.tail_fraction}")
        if self.eps <= 0:
            raise UsageError(f"eps must be positive, got {self.eps}")
        if self.K is not None and self.K <= 1:
            raise UsageError(f"K must exceed 1, got {self.K}")
        for k in self.k_values:
            if k < 1 or k > 6:
                raise UsageError(f"moment orders must lie in 1..6, got k={k}")
        for T in self.T_values:
            if T <= 0:
                raise UsageError(f"truncation heights must be positive, got T={T}")
        if self.threads < 1:
            raise UsageError(f"thread count must be positive, got {self.threads}")
        if self.segment_odds < 16:
            raise UsageError(f"segment size too small: {self.segment_odds}")

    def public_dict(self) -> dict:
        """The settings that determine the mathematics, echoed into reports.

        Thread count, output directory, and resume mode are excluded on
        purpose: none of them may change a single output byte.
        """
        return {
            "q": self.q, "a": self.a, "b": self.b,
            "x_max": self.x_max, "h": self.h,
            "zeros": self.zeros, "chi": self.chi,
            "mchi": dict(sorted(self.mchi.items())),
            "eps": self.eps, "K": self.K,
            "tail_fraction": self.tail_fraction,
            "T": list(self.T_values), "k": list(self.k_values),
            "segment_odds": self.segment_odds,
            "finite_size": self.finite_size,
        }


# ---------------------------------------------------------------------------
# configuration assembly


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"config key {key!r} wants a boolean, got {raw!r}")


def _parse_floats(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise UsageError(f"bad number list {raw!r}: {exc}") from None


def _parse_ints(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise UsageError(f"bad integer list {raw!r}: {exc}") from None


def _parse_mchi_item(raw: str) -> tuple[str, int]:
    label, eq, value = raw.partition("=")
    if not eq:
        raise UsageError(f"mchi wants LABEL=ORDER, got {raw!r}")
    try:
        order = int(value)
    except ValueError:
        raise UsageError(f"mchi order must be an integer, got {raw!r}") from None
    if order < 0:
        raise UsageError(f"mchi order must be nonnegative, got {raw!r}")
    return label.strip(), order


def read_config_file(path: str) -> dict:
    """key=value lines; '#' comments; unknown keys rejected."""
    known = {"q", "a", "b", "xmax", "grid-h", "zeros", "chi", "mchi", "eps",
             "K", "tail-fraction", "T", "k", "threads", "segment-odds",
             "out", "resume", "raw"}
    values: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, eq, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        if key == "mchi":
            values.setdefault("mchi", {})
            for item in value.split(","):
                label, order = _parse_mchi_item(item)
                values["mchi"][label] = order
        else:
            values[key] = value
    return values


def _config_from(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values = read_config_file(args.config) if args.config else {}

    def pick(flag_value, file_key: str, convert):
        if flag_value is not None:
            return flag_value
        if file_key in file_values:
            raw = file_values[file_key]
            return convert(raw) if isinstance(raw, str) else raw
        return None

    def setattr_if(name, value):
        if value is not None:
            setattr(cfg, name, value)

    setattr_if("q", pick(args.q, "q", int))
    setattr_if("a", pick(args.a, "a", int))
    setattr_if("b", pick(args.b, "b", int))
    setattr_if("x_max", pick(args.xmax, "xmax", float))
    setattr_if("h", pick(args.grid_h, "grid-h", float))
    setattr_if("zeros", pick(args.zeros, "zeros", str))
    setattr_if("chi", pick(args.chi, "chi", str))
    setattr_if("eps", pick(args.eps, "eps", float))
    setattr_if("K", pick(args.K, "K", float))
    setattr_if("tail_fraction", pick(args.tail_fraction, "tail-fraction", float))
    setattr_if("T_values", pick(
        tuple(args.T) if args.T is not None else None, "T", _parse_floats))
    setattr_if("k_values", pick(
        tuple(args.k) if args.k is not None else None, "k", _parse_ints))
    setattr_if("segment_odds", pick(args.segment_odds, "segment-odds", int))
    setattr_if("out", pick(args.out, "out", str))
    if args.resume:
        cfg.resume = True
    elif "resume" in file_values:
        cfg.resume = _parse_bool(file_values["resume"], "resume")
    if args.raw:
        cfg.finite_size = False
    elif "raw" in file_values:
        cfg.finite_size = not _parse_bool(file_values["raw"], "raw")

    mchi: dict[str, int] = dict(file_values.get("mchi", {}))
    for item in args.mchi or ():
        label, order = _parse_mchi_item(item)
        mchi[label] = order
    cfg.mchi = mchi

    threads = pick(args.threads, "threads", int)
    if threads is None:
        env = os.environ.get("PRL_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise UsageError(f"PRL_THREADS must be an integer, got {env!r}") from None
    cfg.threads = threads if threads is not None else 1

    try:
        cfg.T_values = tuple(float(T) for T in cfg.T_values)
        cfg.k_values = tuple(int(k) for k in cfg.k_values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# deterministic emission


def _plain(obj):
    """Recursively strip numpy/complex/dataclass types for json.dumps."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"im": obj.imag, "re": obj.real}
    return obj


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


class _Emitter:
    """Writes report files under the output directory and remembers them.

    Checkpoint CSVs are written by the tally layer, not through here, so a
    failure cleanup never deletes resumable state.
    """

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.written: list[Path] = []

    def _target(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        self.written.append(path)
        return path

    def csv(self, name: str, header: list[str], columns: list[np.ndarray]) -> Path:
        path = self._target(name)
        rows = zip(*columns)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_format_cell(v) for v in row) + "\n")
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self._target(name)
        with open(path, "w") as fh:
            json.dump(_plain(payload), fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path

    def cleanup(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except OSError:
                pass


# ---------------------------------------------------------------------------
# shared pipeline pieces


def checkpoint_name(cfg: RunConfig) -> str:
    return f"checkpoints_q{cfg.q}_h{cfg.h!r}_x{int(math.floor(cfg.x_max))}.csv"


def _run_tally(cfg: RunConfig, collect=()):
    grid = CheckpointGrid.from_xmax(cfg.x_max, cfg.h)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    persist = str(Path(cfg.out) / checkpoint_name(cfg))
    return accumulate(
        grid, cfg.q,
        segment_odds=cfg.segment_odds,
        threads=cfg.threads,
        collect=collect,
        persist=persist,
        resume=cfg.resume,
    )


def _fit_payload(fit) -> dict:
    resid = np.asarray(fit.residual.values)
    tail = resid[-max(1, len(resid) // 4):]
    payload = {
        "C_hat": fit.C_hat,
        "method": fit.method,
        "window_y": list(fit.window),
        "residual_tail_max": float(np.max(np.abs(tail))),
        "details": fit.details,
    }
    if fit.L_hat is not None:
        payload["L_hat"] = complex(fit.L_hat)
    return payload


def _load_expanded(cfg: RunConfig, t):
    """Zero dataset -> merged vanishing orders, expanded list, warnings."""
    dataset = load_zeros(cfg.zeros, cfg.q)
    orders = {label: order for label, order in dataset.central_orders.items()}
    orders.update(cfg.mchi)
    notes: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        expanded = symmetric_expand(dataset, t)
    notes.extend(str(w.message) for w in caught)
    return dataset, orders, expanded, notes


# ---------------------------------------------------------------------------
# subcommands


def cmd_bias(cfg: RunConfig, emit: _Emitter | None = None) -> dict:
    """Full race pipeline: D series, C fits, envelope report, race density."""
    emit = emit or _Emitter(cfg.out)
    result = _run_tally(cfg, collect=(cfg.a, cfg.b))
    series = result.series
    t = race_weight(cfg.a, cfg.b, cfg.q)
    M = bias_constant(t, vanishing_orders=cfg.mchi or None)
    D = race_series(series, t)
    delta = delta_exact(series, t, M)
    jumps_a = result.jumps[cfg.a % cfg.q].astype(np.float64)
    jumps_b = result.jumps[cfg.b % cfg.q].astype(np.float64)
    jumps = race_jump_weights(jumps_a, jumps_b)

    fit_notes: list[str] = []
    if float(series.grid.y[-1]) >= 10.0:
        fits = estimate_C_all(D, M, delta, jumps,
                              tail_fraction=cfg.tail_fraction,
                              finite_size=cfg.finite_size)
    else:
        # The via-L route needs the oscillation series to settle; on a short
        # grid fall back to the two estimates that remain well defined.
        fits = {
            "pointwise-tail": estimate_C(D, M, "pointwise-tail",
                                         tail_fraction=cfg.tail_fraction,
                                         finite_size=cfg.finite_size),
            "mean": estimate_C(D, M, "mean", jumps=jumps,
                               finite_size=cfg.finite_size),
        }
        fits["spread"] = abs(fits["pointwise-tail"].C_hat - fits["mean"].C_hat)
        fit_notes.append("via-L fit skipped: grid ends below y=10")
    C = fits["pointwise-tail"].C_hat
    env_main = envelope_check(D, M, C, eps=cfg.eps)
    K_used = cfg.K if cfg.K is not None else calibrate_K(D, M, C)
    env_log = envelope_check(D, M, C, eps=cfg.eps, envelope="log-envelope", K=K_used)
    race_full = density_race(jumps_a, jumps_b, 2.0, float(series.grid.x[-1]))
    races = {"from_2": race_full}
    if cfg.x_max >= 1e4:
        races["from_1000"] = density_race(jumps_a, jumps_b, 1000.0,
                                          float(series.grid.x[-1]))

    config = cfg.public_dict()
    emit.csv("bias_series.csv",
             ["x", "y", "D", "delta"],
             [series.grid.x, series.grid.y, np.asarray(D.values),
              np.asarray(delta.values).real])
    emit.json("bias_fit.json", {
        "config": config,
        "M": complex(M.value),
        "fits": {name: _fit_payload(fit) for name, fit in fits.items()
                 if name != "spread"},
        "spread": fits["spread"],
        "notes": fit_notes,
    })
    emit.json("bias_envelope.json", {
        "config": config,
        "C": C,
        "M": complex(M.value),
        "K": K_used,
        "theorem_main": env_main,
        "log_envelope": env_log,
    })
    emit.json("bias_race.json", {"config": config, "windows": races})
    return {
        "result": result, "series": series, "t": t, "M": M, "D": D,
        "delta": delta, "jumps": (jumps_a, jumps_b), "fits": fits,
        "envelope_main": env_main, "envelope_log": env_log, "races": races,
        "files": list(emit.written),
    }


def cmd_euler(cfg: RunConfig, emit: _Emitter | None = None) -> dict:
    """Partial Euler product series and its stabilization report."""
    emit = emit or _Emitter(cfg.out)
    label = cfg.chi if cfg.chi is not None else f"{cfg.q}.1"
    try:
        chi = character_by_label(label)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if chi.modulus != cfg.q:
        raise UsageError(f"character {label} does not live mod {cfg.q}")
    if chi.is_principal:
        raise UsageError("the principal character has no central Euler product here")
    m_chi = cfg.mchi.get(label, 0)

    result = _run_tally(cfg)
    F = euler_series(result.series, chi, m_chi)
    ell = estimate_ell(F, cfg.tail_fraction)
    report = euler_density_check(F, ell, eps=cfg.eps)

    config = cfg.public_dict()
    vals = np.asarray(F.values)
    emit.csv("euler_series.csv",
             ["x", "y", "F_re", "F_im"],
             [F.grid.x, F.grid.y, vals.real, vals.imag])
    emit.json("euler_fit.json", {
        "config": config,
        "character": label,
        "m_chi": m_chi,
        "ell_hat": ell,
        "density": report,
    })
    return {"result": result, "F": F, "ell": ell, "report": report,
            "chi": chi, "files": list(emit.written)}


def _T_tag(T: float) -> str:
    return str(int(T)) if float(T).is_integer() else repr(float(T))


def cmd_delta(cfg: RunConfig, emit: _Emitter | None = None) -> dict:
    """Exact fluctuation vs zero-sum reconstructions at each height T."""
    if not cfg.zeros:
        raise UsageError("delta needs a zero dataset (--zeros)")
    emit = emit or _Emitter(cfg.out)
    result = _run_tally(cfg)
    series = result.series
    t = race_weight(cfg.a, cfg.b, cfg.q)
    dataset, orders, expanded, notes = _load_expanded(cfg, t)
    M = bias_constant(t, vanishing_orders=orders or None)
    exact = delta_exact(series, t, M)
    if not expanded:
        notes.append("zero dataset is empty; every reconstruction is identically zero")

    heights = cfg.T_values or ((dataset.height(),) if len(dataset) else (0.0,))
    heights = tuple(sorted(set(heights)))
    grid = series.grid
    recon: dict[float, SampleSeries] = {}
    for T in heights:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            recon[T] = delta_zero_sum(grid, expanded, T=T)
        notes.extend(str(w.message) for w in caught)

    y_hi = min(15.0, grid.y_max)
    rms_rows = []
    if grid.y_max >= 5.0:
        for T in heights:
            rms_rows.append({"T": T, "rms": rms_window(exact, recon[T], 5.0, y_hi)})
    monotone = all(
        rms_rows[i + 1]["rms"] <= rms_rows[i]["rms"] * 1.05
        for i in range(len(rms_rows) - 1)
    ) if len(rms_rows) > 1 else None

    config = cfg.public_dict()
    emit.csv("delta_exact.csv",
             ["x", "y", "delta"],
             [grid.x, grid.y, np.asarray(exact.values).real])
    header = ["x", "y"]
    columns = [grid.x, grid.y]
    for T in heights:
        vals = np.asarray(recon[T].values)
        header += [f"delta_T{_T_tag(T)}_re", f"delta_T{_T_tag(T)}_im"]
        columns += [vals.real, vals.imag]
    emit.csv("delta_zero_sum.csv", header, columns)
    emit.json("delta_rms.json", {
        "config": config,
        "M": complex(M.value),
        "zero_count": len(dataset),
        "dataset_height": dataset.height() if len(dataset) else 0.0,
        "rms_window_y": [5.0, y_hi] if grid.y_max >= 5.0 else None,
        "rms": rms_rows,
        "rms_nonincreasing": monotone,
        "warnings": notes,
    })
    return {"result": result, "exact": exact, "recon": recon, "rms": rms_rows,
            "notes": notes, "M": M, "files": list(emit.written)}


def cmd_moments(cfg: RunConfig, emit: _Emitter | None = None) -> dict:
    """Even moments of the fluctuation and the growth-constant fit."""
    emit = emit or _Emitter(cfg.out)
    result = _run_tally(cfg)
    series = result.series
    t = race_weight(cfg.a, cfg.b, cfg.q)
    M = bias_constant(t, vanishing_orders=cfg.mchi or None)
    delta = delta_exact(series, t, M)
    c_fit, rows = fit_moment_constant(delta, ks=cfg.k_values)

    extras: dict = {}
    if series.grid.y_max >= 18.0:
        extras["m2_at_14"] = moment(delta, 1, 14.0)
        extras["m2_at_18"] = moment(delta, 1, 18.0)
    if series.grid.y_max >= 4.0:
        w_value, _ = weighted_second_moment(delta)
        extras["weighted_m2_at_end"] = w_value

    config = cfg.public_dict()
    emit.csv("moments.csv",
             ["k", "Y", "moment", "moment_root"],
             [np.array([r["k"] for r in rows]),
              np.array([r["Y"] for r in rows]),
              np.array([r["moment"] for r in rows]),
              np.array([r["moment_root"] for r in rows])])
    emit.json("moments_fit.json", {
        "config": config,
        "M": complex(M.value),
        "C_fit": c_fit,
        "rows": rows,
        **extras,
    })
    return {"result": result, "delta": delta, "C_fit": c_fit, "rows": rows,
            "extras": extras, "files": list(emit.written)}


def cmd_mean(cfg: RunConfig, emit: _Emitter | None = None) -> dict:
    """Exact mean integral of the race and the mean-route C estimate."""
    emit = emit or _Emitter(cfg.out)
    result = _run_tally(cfg, collect=(cfg.a, cfg.b))
    series = result.series
    t = race_weight(cfg.a, cfg.b, cfg.q)
    M = bias_constant(t, vanishing_orders=cfg.mchi or None)
    D = race_series(series, t)
    jumps_a = result.jumps[cfg.a % cfg.q].astype(np.float64)
    jumps_b = result.jumps[cfg.b % cfg.q].astype(np.float64)
    positions, weights = race_jump_weights(jumps_a, jumps_b)
    trace = mean_values(positions, weights, series.grid.x)
    fit = estimate_C(D, M, "mean", jumps=(positions, weights),
                     tail_fraction=cfg.tail_fraction,
                     finite_size=cfg.finite_size)
    raw = estimate_C(D, M, "mean", jumps=(positions, weights),
                     tail_fraction=cfg.tail_fraction, finite_size=False)

    config = cfg.public_dict()
    emit.csv("mean_trace.csv",
             ["x", "y", "mean"],
             [series.grid.x, series.grid.y, trace])
    emit.json("mean_fit.json", {
        "config": config,
        "M": complex(M.value),
        "mean_at_end": mean_integral(positions, weights, float(series.grid.x[-1])),
        "fit": _fit_payload(fit),
        "fit_raw": _fit_payload(raw),
    })
    return {"result": result, "trace": trace, "fit": fit, "fit_raw": raw,
            "M": M, "files": list(emit.written)}


def cmd_zeros_validate(cfg: RunConfig, emit: _Emitter | None = None) -> dict:
    """Parse and summarize a zero dataset without running any pipeline."""
    if not cfg.zeros:
        raise UsageError("zeros-validate needs a zero dataset (--zeros)")
    emit = emit or _Emitter(cfg.out)
    dataset = load_zeros(cfg.zeros, cfg.q)
    per_label: dict[str, dict] = {}
    for label in dataset.labels():
        ordinates = dataset.ordinates(label)
        per_label[label] = {
            "count": len(ordinates),
            "height": float(ordinates[-1]) if len(ordinates) else 0.0,
            "central_order": dataset.central_order(label),
        }
    payload = {
        "modulus": dataset.modulus,
        "entries": len(dataset),
        "height": dataset.height() if len(dataset) else 0.0,
        "labels": per_label,
    }
    emit.json("zeros_summary.json", payload)
    return {"dataset": dataset, "summary": payload, "files": list(emit.written)}


_HANDLERS = {
    "bias": cmd_bias,
    "euler": cmd_euler,
    "delta": cmd_delta,
    "moments": cmd_moments,
    "mean": cmd_mean,
    "zeros-validate": cmd_zeros_validate,
}

_PLANNED = {
    "bias": ["bias_series.csv", "bias_fit.json", "bias_envelope.json", "bias_race.json"],
    "euler": ["euler_series.csv", "euler_fit.json"],
    "delta": ["delta_exact.csv", "delta_zero_sum.csv", "delta_rms.json"],
    "moments": ["moments.csv", "moments_fit.json"],
    "mean": ["mean_trace.csv", "mean_fit.json"],
    "zeros-validate": ["zeros_summary.json"],
}

_NEEDS_CHECKPOINTS = {"bias", "euler", "delta", "moments", "mean"}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="primerace",
        description="Weighted prime races: tallies, bias constants, envelopes, "
                    "Euler products, and zero-sum reconstructions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("bias", "race pipeline: D series, C estimates, envelope and race densities"),
        ("euler", "partial Euler product series and stabilization check"),
        ("delta", "exact fluctuation vs zero-sum reconstruction"),
        ("moments", "even moments of the fluctuation and growth-constant fit"),
        ("mean", "exact mean integral and mean-route C estimate"),
        ("zeros-validate", "parse a zero dataset and summarize it"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--q", type=int, help="modulus (default 4)")
        p.add_argument("--a", type=int, help="leading race class (default 3)")
        p.add_argument("--b", type=int, help="trailing race class (default 1)")
        p.add_argument("--xmax", type=float, help="upper end of the x range")
        p.add_argument("--grid-h", dest="grid_h", type=float,
                       help="checkpoint spacing in y = log x (default 0.01)")
        p.add_argument("--zeros", help="zero dataset file")
        p.add_argument("--chi", help="character label q.k (euler)")
        p.add_argument("--mchi", action="append", metavar="LABEL=ORDER",
                       help="central vanishing order override; repeatable")
        p.add_argument("--eps", type=float, help="envelope exponent offset (default 0.5)")
        p.add_argument("--K", type=float, help="log-envelope constant (default: calibrated)")
        p.add_argument("--tail-fraction", dest="tail_fraction", type=float,
                       help="fraction of the range used for tail fits (default 0.25)")
        p.add_argument("--T", type=_parse_floats,
                       help="comma-separated truncation heights (delta)")
        p.add_argument("--k", type=_parse_ints,
                       help="comma-separated moment orders (moments)")
        p.add_argument("--threads", type=int,
                       help="sieve worker threads (default: PRL_THREADS or 1)")
        p.add_argument("--segment-odds", dest="segment_odds", type=int,
                       help="odd numbers per sieve segment")
        p.add_argument("--out", help="output directory (default .)")
        p.add_argument("--resume", action="store_true",
                       help="continue from the persisted checkpoint file")
        p.add_argument("--raw", action="store_true",
                       help="disable finite-size corrections in C estimates")
        p.add_argument("--dry-run", dest="dry_run", action="store_true",
                       help="print the plan and write nothing")
    return parser


def _print_plan(command: str, cfg: RunConfig) -> None:
    print(f"plan: {command}")
    for key, value in sorted(cfg.public_dict().items()):
        print(f"  {key} = {value}")
    out = Path(cfg.out)
    if command in _NEEDS_CHECKPOINTS:
        ck = out / checkpoint_name(cfg)
        state = "resume" if (cfg.resume and ck.exists()) else "fresh"
        print(f"  checkpoints -> {ck} ({state})")
    for name in _PLANNED[command]:
        print(f"  write -> {out / name}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        cfg = _config_from(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dry_run:
        _print_plan(args.command, cfg)
        return 0
    emit = _Emitter(cfg.out)
    try:
        bundle = _HANDLERS[args.command](cfg, emit)
    except UsageError as exc:
        emit.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        emit.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in bundle.get("files", ()):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
