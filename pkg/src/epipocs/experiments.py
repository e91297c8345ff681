"""
Experiment configuration and the runners behind the command-line tool.

Every run writes CSV files (and PGM images where relevant) under the output
directory. The first line of each CSV is a ``# config:`` comment holding the
full configuration, which `parse_config_text` accepts back, so any CSV can
be replayed with ``--config``. All randomness comes from sub-seeds of the
single global seed (see `derive_seed`); wall times go to stderr only so
that re-runs are byte-identical.
"""

from __future__ import annotations

import sys
import time
import zlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .costs import L1Cost, TVCost, tv_eval
from .cs import (
    BlockScheme,
    MeasurementSystem,
    SparseSpec,
    TransformOp,
    block_cs_reconstruct,
    cs_reconstruct,
    gaussian_measurement_matrix,
    make_cusp,
    make_sparse,
)
from .denoise import DEFAULT_LAMBDA_GRID, BaselineConfig, chambolle_denoise, lambda_grid_search, pocs_denoise
from .fileio import CSVFormatError, PGMError, load_csv_signal, load_pgm, save_csv, save_pgm, save_signal_csv
from .geometry import NumericalError
from .metrics import NoiseModel, add_noise, nrmse, ntv, snr_db
from .phantoms import make_phantom, synthetic_corpus

COMMANDS = ("denoise", "cs1d", "cs2d", "curves")
METHODS = ("pocs", "chambolle", "both")
SUBSEED_RULE = "SeedSequence([seed, crc32(role), *indices])"
EPS_CONVENTION = "eps weights the sigma1 component"


class ConfigError(ValueError):
    pass


def derive_seed(seed: int, role: str, *indices: int) -> int:
    """Sub-seed for one random role, e.g. ``derive_seed(0, "noise", 2, 1)``."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(role.encode()), *(int(i) for i in indices)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# --------------------------------------------------------------------------
# configuration


def parse_noise(text: str) -> NoiseModel:
    """``gaussian:<std>`` or ``eps:<eps>,<sigma1>,<sigma2>``."""
    kind, _, args = text.partition(":")
    try:
        vals = [float(a) for a in args.split(",")]
    except ValueError:
        raise ConfigError(f"bad noise spec {text!r}") from None
    try:
        if kind == "gaussian" and len(vals) == 1:
            return NoiseModel.gaussian(vals[0])
        if kind == "eps" and len(vals) == 3:
            return NoiseModel.eps_contaminated(*vals)
    except ValueError as exc:
        raise ConfigError(f"bad noise spec {text!r}: {exc}") from None
    raise ConfigError(f"bad noise spec {text!r}")


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    return tuple(float(t) for t in str(text).replace(",", " ").split())


def _ints(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(t) for t in text)
    return tuple(int(t) for t in str(text).replace(",", " ").split())


def _noises(value) -> tuple:
    if isinstance(value, str):
        value = value.split()
    return tuple(v if isinstance(v, NoiseModel) else parse_noise(v) for v in value)


def _opt(conv):
    return lambda v: None if v in (None, "", "none") else conv(v)


_CONVERTERS = {
    "command": str,
    "seed": int,
    "out_dir": str,
    "alpha": float,
    "noise": _noises,
    "method": str,
    "lambda_grid": _floats,
    "measure_pct": _floats,
    "measurements": _ints,
    "cost": _opt(str),
    "block": _ints,
    "ratio": float,
    "input": _opt(str),
    "phantom": _opt(int),
    "corpus": _opt(int),
    "size": int,
    "signal": _opt(str),
    "tol": float,
    "max_iter": int,
    "max_outer": int,
    "inner_iter": int,
    "workers": int,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    Inputs: exactly one of `input` (PGM for image commands, CSV for
    ``cs1d``), `phantom` (size of the fixed phantom), `corpus` (number of
    seeded phantoms of side `size`) or `signal` (``sparse:<N>,<K>`` or
    ``cusp:<N>``). Without any, image commands use a 64 x 64 phantom and
    ``cs1d`` uses ``sparse:128,5``.
    """

    command: str
    seed: int = 0
    out_dir: str = "out"
    alpha: float = 1.0
    noise: tuple = (NoiseModel.gaussian(25.0),)
    method: str = "both"
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    measure_pct: tuple = ()
    measurements: tuple = ()
    cost: str | None = None
    block: tuple = (32,)
    ratio: float = 0.3
    input: str | None = None
    phantom: int | None = None
    corpus: int | None = None
    size: int = 64
    signal: str | None = None
    tol: float = 1e-6
    max_iter: int = 500
    max_outer: int = 1000
    inner_iter: int = 30
    workers: int = 1

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        kwargs = {}
        for key, value in mapping.items():
            key = key.replace("-", "_")
            if key not in _CONVERTERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                kwargs[key] = _CONVERTERS[key](value)
            except ConfigError:
                raise
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {key}: {value!r}") from None
        if "command" not in kwargs:
            raise ConfigError("no command given")
        return cls(**kwargs).validated()

    def validated(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not self.noise:
            raise ConfigError("at least one noise model is needed")
        if not self.lambda_grid or min(self.lambda_grid) <= 0:
            raise ConfigError("lambda grid must be nonempty and positive")
        if not 0 < self.ratio <= 1:
            raise ConfigError("ratio must lie in (0, 1]")
        if any(b < 1 for b in self.block) or not self.block:
            raise ConfigError("block sizes must be positive")
        if any(not 0 < p <= 100 for p in self.measure_pct):
            raise ConfigError("measurement percentages must lie in (0, 100]")
        if self.measure_pct and self.measurements:
            raise ConfigError("give either measurements or measure-pct, not both")
        if min(self.tol, self.max_iter, self.max_outer, self.inner_iter, self.workers, self.size) <= 0:
            raise ConfigError("tolerances, iteration counts, workers and size must be positive")
        sources = [k for k in ("input", "phantom", "corpus", "signal") if getattr(self, k) is not None]
        if len(sources) > 1:
            raise ConfigError(f"more than one input source: {', '.join(sources)}")
        cfg = self
        if not sources:
            cfg = replace(cfg, signal="sparse:128,5") if self.command == "cs1d" else replace(cfg, phantom=64)
        if cfg.command == "cs1d" and (cfg.phantom is not None or cfg.corpus is not None):
            raise ConfigError("cs1d needs a 1-D signal source (signal or input)")
        if cfg.command in ("denoise", "cs2d") and cfg.signal is not None:
            raise ConfigError(f"{cfg.command} needs an image source")
        costs = {"cs1d": ("tv", "l1", "l1-dct"), "cs2d": ("tv", "l1-dct"), "curves": ("tv", "l1", "l1-dct")}
        if cfg.cost is not None and cfg.cost not in costs.get(cfg.command, ()):
            raise ConfigError(f"cost {cfg.cost!r} not available for {cfg.command}")
        if cfg.signal is not None:
            _signal_from_spec(cfg.signal)
        return cfg

    def echo(self) -> str:
        """One-line ``key=value; ...`` rendering accepted by `parse_config_text`."""
        parts = []
        for f in fields(self):
            if f.name == "out_dir":
                continue
            value = getattr(self, f.name)
            if f.name == "noise":
                text = " ".join(n.label for n in value)
            elif isinstance(value, tuple):
                text = ",".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
            elif value is None:
                text = "none"
            else:
                text = f"{value:g}" if isinstance(value, float) else str(value)
            parts.append(f"{f.name}={text}")
        parts.append(f"subseed={SUBSEED_RULE}")
        if any(n.kind == "eps_contaminated" for n in self.noise):
            parts.append(f"eps_convention={EPS_CONVENTION}")
        return "config: " + "; ".join(parts)


def parse_config_text(text: str) -> dict:
    """Parse a flat ``key=value`` file.

    Blank lines and ``#`` comments are ignored, except a ``# config:`` line
    as written at the top of every output CSV, whose ``;``-separated pairs
    are read; the rest of such a CSV is skipped.
    """
    values = {}
    from_csv = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("config:"):
                for pair in body[len("config:") :].split(";"):
                    key, sep, value = pair.partition("=")
                    if sep and key.strip() not in ("subseed", "eps_convention"):
                        values[key.strip().replace("-", "_")] = value.strip()
                from_csv = True
            continue
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            if from_csv:
                continue
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


# --------------------------------------------------------------------------
# inputs


def _signal_from_spec(spec: str):
    kind, _, args = spec.partition(":")
    try:
        nums = [int(a) for a in args.split(",")] if args else []
    except ValueError:
        raise ConfigError(f"bad signal spec {spec!r}") from None
    if kind == "sparse" and len(nums) == 2 and 0 <= nums[1] <= nums[0]:
        return "sparse", nums
    if kind == "cusp" and len(nums) == 1 and nums[0] >= 2:
        return "cusp", nums
    raise ConfigError(f"bad signal spec {spec!r}; use sparse:<N>,<K> or cusp:<N>")


def _images(cfg: ExperimentConfig) -> list:
    if cfg.input is not None:
        return [(Path(cfg.input).stem, load_pgm(cfg.input))]
    if cfg.corpus is not None:
        return [(f"phantom{i}", img) for i, img in enumerate(synthetic_corpus(cfg.corpus, cfg.size, cfg.seed))]
    return [("phantom", make_phantom(cfg.phantom))]


def _signal(cfg: ExperimentConfig):
    if cfg.input is not None:
        return Path(cfg.input).stem, load_csv_signal(cfg.input)
    kind, nums = _signal_from_spec(cfg.signal)
    if kind == "cusp":
        return f"cusp{nums[0]}", make_cusp(nums[0])
    n, k = nums
    return f"sparse{n}_{k}", make_sparse(SparseSpec(n, k, seed=derive_seed(cfg.seed, "signal", 0)))


def _safe_ntv(truth, estimate):
    return ntv(truth, estimate) if tv_eval(truth) > 0 else float("nan")


# --------------------------------------------------------------------------
# runners


def _run_denoise(cfg, out):
    rows = []
    header = ["image", "noise", "method", "lambda", "input_snr", "output_snr", "nrmse", "ntv", "iterations"]
    for i, (name, truth) in enumerate(_images(cfg)):
        for k, model in enumerate(cfg.noise):
            v = add_noise(truth, model, derive_seed(cfg.seed, "noise", i, k))
            save_pgm(out / f"{name}_n{k}_noisy.pgm", v)
            if cfg.method in ("pocs", "both"):
                r = pocs_denoise(v, cfg.alpha, cfg.tol, cfg.max_iter, truth=truth)
                rows.append([name, model.label, "pocs", "", r.input_snr, r.output_snr,
                             nrmse(truth, r.estimate), _safe_ntv(truth, r.estimate), r.iterations_run])
                save_pgm(out / f"{name}_n{k}_pocs.pgm", r.estimate)
            if cfg.method in ("chambolle", "both"):
                lam, _ = lambda_grid_search(v, truth, cfg.lambda_grid)
                r = chambolle_denoise(v, BaselineConfig(lam), truth=truth)
                rows.append([name, model.label, "chambolle", lam, r.input_snr, r.output_snr,
                             nrmse(truth, r.estimate), _safe_ntv(truth, r.estimate), r.iterations_run])
                save_pgm(out / f"{name}_n{k}_chambolle.pgm", r.estimate)
    save_csv(out / "summary.csv", header, rows, comment=cfg.echo())


def _cs1d_setup(cfg, x):
    n = x.size
    kind = cfg.cost or ("l1" if cfg.signal and cfg.signal.startswith("sparse") else "tv")
    transform = TransformOp("dct") if kind == "l1-dct" else None
    cost = TVCost("1d") if kind == "tv" else L1Cost()
    if cfg.measurements:
        ms = list(cfg.measurements)
    elif cfg.measure_pct:
        ms = [max(1, round(p / 100.0 * n)) for p in cfg.measure_pct]
    else:
        ms = [50]
    if any(not 1 <= m <= n for m in ms):
        raise ConfigError(f"measurement counts must lie in [1, {n}]")
    return kind, transform, cost, ms


def _run_cs1d(cfg, out):
    name, x = _signal(cfg)
    kind, transform, cost, ms = _cs1d_setup(cfg, x)
    save_signal_csv(out / f"{name}_truth.csv", x, comment=cfg.echo())
    header = ["signal", "cost", "measurements", "percent", "snr_db", "residual", "iterations", "stop_reason"]
    rows = []
    for m in ms:
        phi = gaussian_measurement_matrix(m, x.size, derive_seed(cfg.seed, "phi", m))
        system = MeasurementSystem.from_signal(phi, x, transform)
        est, tr = cs_reconstruct(system, cost, cfg.alpha, cfg.tol, cfg.max_outer, cfg.inner_iter)
        rows.append([name, kind, m, 100.0 * m / x.size, snr_db(x, est), tr.residuals[-1], tr.iterations,
                     tr.stop_reason])
        save_signal_csv(out / f"{name}_M{m}.csv", est, comment=cfg.echo())
    save_csv(out / "summary.csv", header, rows, comment=cfg.echo())


def _run_cs2d(cfg, out):
    kind = {"tv": "tv", "l1-dct": "l1_dct", None: "tv"}[cfg.cost]
    header = ["image", "block", "ratio", "cost", "measurements_per_block", "snr_db"]
    rows = []
    for name, img in _images(cfg):
        for b in cfg.block:
            scheme = BlockScheme(b, cfg.ratio, derive_seed(cfg.seed, "phi", b))
            rec = block_cs_reconstruct(img, scheme, kind, cfg.alpha, tol=cfg.tol, max_outer=cfg.max_outer,
                                       inner_iter=cfg.inner_iter, workers=cfg.workers)
            rows.append([name, b, cfg.ratio, kind, scheme.measurements, snr_db(img, rec)])
            save_pgm(out / f"{name}_B{b}.pgm", rec)
    save_csv(out / "summary.csv", header, rows, comment=cfg.echo())


def _run_curves(cfg, out):
    if cfg.signal is not None:
        name, x = _signal(cfg)
        kind, transform, cost, ms = _cs1d_setup(cfg, x)
        m = ms[0]
        phi = gaussian_measurement_matrix(m, x.size, derive_seed(cfg.seed, "phi", m))
        system = MeasurementSystem.from_signal(phi, x, transform)
        snrs = []
        est, tr = cs_reconstruct(system, cost, cfg.alpha, cfg.tol, cfg.max_outer, cfg.inner_iter,
                                 callback=lambda i, s: snrs.append(snr_db(x, system.to_signal(s))))
        rows = [[i + 1, tr.residuals[i], tr.costs[i], tr.changes[i], snrs[i]] for i in range(tr.iterations)]
        save_csv(out / f"curves_{name}_M{m}.csv", ["iteration", "residual", "cost", "change", "snr_db"], rows,
                 comment=cfg.echo())
        return
    header = ["iteration", "distance", "nrmse_db", "ntv"]
    summary = []
    for i, (name, truth) in enumerate(_images(cfg)):
        for k, model in enumerate(cfg.noise):
            v = add_noise(truth, model, derive_seed(cfg.seed, "noise", i, k))
            r = pocs_denoise(v, cfg.alpha, cfg.tol, cfg.max_iter, truth=truth)
            rows = [
                [j + 1, d, 20.0 * np.log10(max(nrmse(truth, p.w), 1e-15)), _safe_ntv(truth, p.w)]
                for j, (d, p) in enumerate(zip(r.trace.distances, r.trace.iterates))
            ]
            save_csv(out / f"curves_{name}_n{k}.csv", header, rows, comment=cfg.echo())
            summary.append([name, model.label, r.input_snr, r.output_snr, r.iterations_run, r.trace.stop_reason])
    save_csv(out / "summary.csv", ["image", "noise", "input_snr", "output_snr", "iterations", "stop_reason"],
             summary, comment=cfg.echo())


_RUNNERS = {"denoise": _run_denoise, "cs1d": _run_cs1d, "cs2d": _run_cs2d, "curves": _run_curves}


def run(cfg: ExperimentConfig) -> int:
    """Run `cfg`; return 0 on success, 1 on numeric failure, 2 on config error."""
    try:
        cfg = cfg.validated()
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        _RUNNERS[cfg.command](cfg, out)
    except (NumericalError, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, PGMError, CSVFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{cfg.command}: done in {time.perf_counter() - t0:.1f} s, outputs in {out}", file=sys.stderr)
    return 0
