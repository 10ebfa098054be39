"""Command-line entry point.

Exit codes: 0 success or pass verdict, 2 usage or domain error, 3 fail verdict.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field

from .errors import ConstructionError, DomainError, ResourceError
from .geometry import leray_volume, leray_volume_oracle, triangle_margin, as_triple
from .lattice import TorusMeasure, torus_measure, triangle_count
from .measure import JointSpectralMeasure
from .smoothing import build_kernel
from .sphere import sphere_measure
from . import verify

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAIL = 3


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    output: str | None = None
    format: str = "json"
    policy: str | None = None


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _schedule(text: str) -> list[float]:
    """``"8,16,32"`` or an inclusive integer range ``"2..40"``."""
    if ".." in text:
        a, b = text.split("..")
        return [float(x) for x in range(int(a), int(b) + 1)]
    return _floats(text)


def _model_measure(model: str, cutoff: float | None, lmax: int | None) -> JointSpectralMeasure:
    if model in ("torus2", "torus3"):
        if cutoff is None:
            raise DomainError(f"--cutoff is required for {model}")
        return torus_measure(int(model[-1]), cutoff)
    if model == "sphere":
        if lmax is None:
            raise DomainError("--lmax is required for sphere")
        return sphere_measure(lmax)
    raise DomainError(f"unknown model {model!r}")


def cmd_leray(args) -> int:
    tau = as_triple(_floats(args.tau))
    closed = leray_volume(args.n, tau)
    print(repr(closed))
    if args.oracle:
        samples = int(float(args.oracle))
        h = args.h if args.h is not None else triangle_margin(tau) / 20
        est, se = leray_volume_oracle(args.n, tau, h, samples, args.seed)
        agree = abs(est - closed) <= 3 * se
        print(f"oracle {est!r} +- {se!r} (h={h!r}, samples={samples}, seed={args.seed})")
        print(f"agree_within_3se {'yes' if agree else 'no'}")
    return EXIT_OK


def cmd_count(args) -> int:
    q = _ints(args.q)
    if len(q) != 3:
        raise DomainError("-q takes three squared norms")
    print(triangle_count(args.n, *q))
    return EXIT_OK


def cmd_measure(args) -> int:
    m = _model_measure(args.model, args.cutoff, args.lmax)
    m.write_json(args.out)
    print(f"wrote {len(m)} atoms to {args.out}")
    return EXIT_OK


def _scan_measure(args) -> JointSpectralMeasure:
    if args.measure:
        return JointSpectralMeasure.read_json(args.measure)
    if args.model:
        return _model_measure(args.model, args.cutoff, args.lmax)
    raise DomainError("give a measure file (-m) or a model (--model)")


def _need(value, flag: str):
    if value is None:
        raise DomainError(f"{flag} is required for this scan")
    return value


def cmd_scan(args) -> int:
    kind = args.kind
    if kind == "weyl":
        report = verify.weyl_check(args.n, _schedule(_need(args.radii, "--radii")), args.threshold)
    else:
        measure = _scan_measure(args)
        if kind == "bad":
            report = verify.bad_cone_scan(measure, _floats(_need(args.dir, "--dir")), _schedule(args.scales or "2..40"))
        elif kind == "tail":
            t1, t2 = _floats(_need(args.t, "--t"))
            report = verify.tail_scan(measure, t1, t2, _need(args.eps, "--eps"))
        else:
            kernel = build_kernel(args.delta * measure.manifold.injectivity_radius, args.grid_points)
            threshold = args.threshold if args.threshold is not None else verify.DEFAULT_THRESHOLD
            scales = _schedule(args.scales or "8,16,32")
            if kind == "good":
                report = verify.good_cone_scan(measure, kernel, _floats(_need(args.tau0, "--tau0")), scales, threshold)
            else:
                t1, t2 = _floats(_need(args.t, "--t"))
                report = verify.interface_scan(measure, kernel, t1, t2, _schedule(args.scales or "1"), threshold)

    config = RunConfig(
        command=f"scan {kind}",
        params={k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "format", "plot")},
        output=args.out,
        format=args.format,
        policy=report.policy,
    )
    if args.format == "csv":
        text = report.to_csv()
    else:
        doc = report.to_dict()
        doc["config"] = asdict(config)
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot:
        from .plotting import save_report_figure

        save_report_figure(report, args.plot)
    print(f"verdict: {report.verdict} ({report.policy})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trispec", description="Eigenfunction triple-product spectral measures on model manifolds.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("leray", help="Leray measure of the triangle configurations with given sides")
    s.add_argument("-n", type=int, required=True, help="dimension")
    s.add_argument("--tau", required=True, help="side lengths, e.g. 3,4,5")
    s.add_argument("--oracle", help="also run the Monte Carlo oracle with this many samples")
    s.add_argument("--h", type=float, help="oracle shell width (default margin/20)")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_leray)

    s = sub.add_parser("count", help="exact lattice triangle count")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("-q", required=True, help="squared side lengths, e.g. 1,1,2")
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("measure", help="write a joint spectral measure as JSON")
    s.add_argument("--model", required=True, choices=["torus2", "torus3", "sphere"])
    s.add_argument("--cutoff", type=float)
    s.add_argument("--lmax", type=int)
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("scan", help="run a verification scan")
    s.add_argument("kind", choices=["good", "bad", "interface", "weyl", "tail"])
    s.add_argument("-m", "--measure", help="measure JSON file")
    s.add_argument("--model", choices=["torus2", "torus3", "sphere"], help="build the measure in memory instead")
    s.add_argument("--cutoff", type=float)
    s.add_argument("--lmax", type=int)
    s.add_argument("--delta", type=float, default=0.9, help="kernel band limit as a fraction of inj M")
    s.add_argument("--grid-points", type=int, default=1024)
    s.add_argument("--tau0", help="direction for good scans")
    s.add_argument("--dir", help="direction for bad scans")
    s.add_argument("--t", help="t1,t2 for interface and tail scans")
    s.add_argument("--eps", type=float)
    s.add_argument("--scales", help="comma list or a..b")
    s.add_argument("--radii", help="radii for weyl scans")
    s.add_argument("-n", type=int, default=2, help="dimension for weyl scans")
    s.add_argument("--threshold", type=float)
    s.add_argument("-o", "--out")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--plot", help="also render the report as a figure (png, pdf, svg)")
    s.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ResourceError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
