"""
Command-line entry point.

    epipocs denoise --noise gaussian:30 --method both --out-dir out
    epipocs cs1d --signal sparse:128,5 --measurements 30,50
    epipocs cs2d --phantom 64 --block 32,64 --ratio 0.3
    epipocs curves --noise gaussian:25
    epipocs --config run.cfg --seed 3

A ``--config`` file holds flat ``key=value`` lines (keys as the long flags
without the leading dashes); flags given on the command line override it.
Any CSV written by a run can be passed as the config file to replay it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import COMMANDS, ConfigError, ExperimentConfig, parse_config_text, run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="epipocs",
        description="Epigraph-projection TV denoising and compressive sensing experiments.",
        argument_default=argparse.SUPPRESS,
    )
    p.add_argument("command", nargs="?", choices=COMMANDS, default=None, help="experiment to run")
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--seed", type=int, help="global seed (default 0)")
    p.add_argument("--out-dir", help="output directory (default ./out)")
    p.add_argument("--alpha", type=float, help="epigraph weight (default 1)")

    src = p.add_argument_group("inputs")
    src.add_argument("--input", help="PGM image, or CSV signal for cs1d")
    src.add_argument("--phantom", type=int, metavar="SIZE", help="fixed piecewise-constant phantom of this size")
    src.add_argument("--corpus", type=int, metavar="N", help="N seeded phantoms")
    src.add_argument("--size", type=int, help="side of corpus phantoms (default 64)")
    src.add_argument("--signal", help="sparse:<N>,<K> or cusp:<N>")

    dn = p.add_argument_group("denoising")
    dn.add_argument("--noise", action="append", metavar="SPEC",
                    help="gaussian:<std> or eps:<eps>,<s1>,<s2>; repeatable")
    dn.add_argument("--method", choices=("pocs", "chambolle", "both"))
    dn.add_argument("--lambda-grid", help="comma-separated baseline lambdas")
    dn.add_argument("--max-iter", type=int, help="epigraph projection steps (default 500)")
    dn.add_argument("--tol", type=float, help="stopping tolerance (default 1e-6)")

    cs = p.add_argument_group("compressive sensing")
    cs.add_argument("--measurements", help="comma-separated measurement counts")
    cs.add_argument("--measure-pct", help="comma-separated measurement percentages")
    cs.add_argument("--cost", choices=("tv", "l1", "l1-dct"))
    cs.add_argument("--block", help="comma-separated block sizes")
    cs.add_argument("--ratio", type=float, help="measurement ratio per block (default 0.3)")
    cs.add_argument("--max-outer", type=int, help="outer iterations (default 1000)")
    cs.add_argument("--inner-iter", type=int, help="cuts per epigraph projection (default 30)")
    cs.add_argument("--workers", type=int, help="processes for block reconstruction")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    given = vars(args)
    if "config" in given:
        try:
            text = Path(given.pop("config")).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        values.update(parse_config_text(text))
    if given.get("command") is None:
        given.pop("command", None)
    if "noise" in given:
        given["noise"] = " ".join(given["noise"])
    values.update(given)
    return ExperimentConfig.from_mapping(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
