"""Command-line front end: config parsing, experiment orchestration,
artifact emission.

Configuration is JSON with a strict schema -- unknown keys are errors, not
warnings, because silently ignored settings are the main failure mode of
monitoring tools.  Every artifact embeds the config hash and seed, and
re-running with the same pair reproduces outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import calibration, evaluation, streams, summaries
from . import detector as detector_mod
from .calibration import CalibrationTarget, ThresholdSchedule
from .statistics import KS, MEAN_DIFF, MMD, STATISTIC_KINDS, Kernel, ReferenceSet, median_heuristic
from .streams import ChangePointModel, DistributionSpec


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# -- schema helpers ---------------------------------------------------------


def _check_keys(obj: dict, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(
            f"{where}: unknown keys {sorted(unknown)}; allowed keys are {sorted(allowed)}"
        )
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing required keys {sorted(missing)}")


def _positive_int(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{where}: expected a positive integer, got {value!r}")
    return value


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    _check_keys(
        cfg,
        allowed={"seed", "detector", "reference", "stream", "evaluation"},
        required={"seed", "detector", "reference"},
        where=str(path),
    )
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError("seed: expected an integer")
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# -- section parsers --------------------------------------------------------


def _parse_distribution(cfg: dict, where: str) -> DistributionSpec:
    _check_keys(
        cfg,
        allowed={"family", "means", "variances", "weights"},
        required={"family", "means", "variances"},
        where=where,
    )
    family = cfg["family"]
    try:
        if family == "gaussian-mixture":
            if "weights" not in cfg:
                raise ConfigError(f"{where}: gaussian-mixture requires weights")
            return DistributionSpec.gaussian_mixture(
                cfg["means"], cfg["variances"], cfg["weights"]
            )
        if "weights" in cfg:
            raise ConfigError(f"{where}: weights only apply to gaussian-mixture")
        if family == "gaussian":
            return DistributionSpec.gaussian(cfg["means"], cfg["variances"])
        if family == "uniform":
            return DistributionSpec.uniform(cfg["means"], cfg["variances"])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")
    raise ConfigError(f"{where}: unknown family {family!r}")


class _ReferenceSection:
    """Either a concrete reference or a per-run redraw recipe."""

    def __init__(self, cfg: dict, seed: int):
        where = "reference"
        if "path" in cfg:
            _check_keys(cfg, allowed={"path"}, required={"path"}, where=where)
            values = streams.load_stream_file(cfg["path"])
            self.spec = None
            self.size = values.shape[0]
            self.redraw = False
            self._fixed = ReferenceSet(values)
            return
        _check_keys(
            cfg,
            allowed={"family", "means", "variances", "weights", "size", "redraw_per_run"},
            required={"family", "means", "variances", "size"},
            where=where,
        )
        self.size = _positive_int(cfg["size"], "reference.size")
        if self.size < 2:
            raise ConfigError("reference.size must be >= 2")
        dist_cfg = {k: v for k, v in cfg.items() if k in ("family", "means", "variances", "weights")}
        self.spec = _parse_distribution(dist_cfg, where)
        self.redraw = bool(cfg.get("redraw_per_run", False))
        self._fixed = None
        self._seed = seed

    @property
    def dim(self) -> int:
        return self._fixed.dim if self._fixed is not None else self.spec.dim

    def concrete(self) -> ReferenceSet:
        """The fixed reference (drawing it once if synthetic)."""
        if self.redraw:
            raise ConfigError(
                "this command needs one concrete reference; set "
                "reference.redraw_per_run to false"
            )
        if self._fixed is None:
            self._fixed = ReferenceSet(
                streams.draw_reference(self.spec, self.size, self._seed, 0)
            )
        return self._fixed


def _parse_summary(cfg: dict | None, ref_dim: int) -> summaries.SummaryStatistic:
    if cfg is None:
        return summaries.identity(ref_dim)
    where = "detector.summary"
    _check_keys(
        cfg,
        allowed={"kind", "dim", "matrix", "model", "loss"},
        required={"kind"},
        where=where,
    )
    kind = cfg["kind"]
    if kind == "identity":
        dim = cfg.get("dim", ref_dim)
        return summaries.identity(_positive_int(dim, f"{where}.dim"))
    if kind == "affine_projection":
        if "matrix" not in cfg:
            raise ConfigError(f"{where}: affine_projection requires matrix")
        matrix = np.asarray(cfg["matrix"], dtype=np.float64)
        if matrix.ndim != 2:
            raise ConfigError(f"{where}.matrix: expected a 2-d array")
        return summaries.SummaryStatistic(
            kind="affine_projection", out_dim=matrix.shape[0], projection=matrix
        )
    if kind in ("model_output", "model_loss"):
        model_cfg = cfg.get("model")
        if model_cfg is None:
            raise ConfigError(f"{where}: {kind} requires model")
        _check_keys(
            model_cfg,
            allowed={"type", "weights", "bias"},
            required={"type", "weights", "bias"},
            where=f"{where}.model",
        )
        if model_cfg["type"] != "linear_softmax":
            raise ConfigError(f"{where}.model: unknown model type {model_cfg['type']!r}")
        model = summaries.LinearSoftmaxModel(model_cfg["weights"], model_cfg["bias"])
        if kind == "model_output":
            return summaries.SummaryStatistic(
                kind="model_output", out_dim=model.n_classes, model=model
            )
        raise ConfigError(
            f"{where}: model_loss summaries need per-instance labels, which "
            "synthetic and file streams do not carry; use the library API"
        )
    raise ConfigError(f"{where}: unknown summary kind {kind!r}")


def _parse_kernel(cfg: dict | None, reference: _ReferenceSection | None) -> Kernel | None:
    if cfg is None:
        return None
    where = "detector.kernel"
    _check_keys(cfg, allowed={"kind", "bandwidth"}, required={"kind"}, where=where)
    bandwidth = cfg.get("bandwidth")
    if bandwidth == "median":
        if reference is None or reference.redraw:
            raise ConfigError(
                f"{where}: the median-heuristic bandwidth needs one concrete "
                "reference; set an explicit bandwidth instead"
            )
        bandwidth = median_heuristic(reference.concrete())
    try:
        return Kernel(kind=cfg["kind"], bandwidth=bandwidth)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")


class _DetectorSection:
    def __init__(self, cfg: dict, reference: _ReferenceSection, seed: int):
        where = "detector"
        _check_keys(
            cfg,
            allowed={"summary", "statistic", "kernel", "window", "threshold"},
            required={"statistic", "window", "threshold"},
            where=where,
        )
        self.statistic = cfg["statistic"]
        if self.statistic not in STATISTIC_KINDS:
            raise ConfigError(
                f"{where}.statistic: unknown statistic {self.statistic!r}; "
                f"expected one of {list(STATISTIC_KINDS)}"
            )
        self.window = _positive_int(cfg["window"], f"{where}.window")
        self.summary = _parse_summary(cfg.get("summary"), reference.dim)
        self.kernel = _parse_kernel(cfg.get("kernel"), reference)
        if self.statistic == MMD and self.kernel is None:
            raise ConfigError(f"{where}: the mmd statistic requires a kernel section")
        if self.statistic in (KS, MEAN_DIFF) and self.summary.out_dim != 1:
            raise ConfigError(
                f"{where}: {self.statistic} requires scalar summaries "
                f"(summary out_dim is {self.summary.out_dim})"
            )
        if self.summary.out_dim != reference.dim:
            raise ConfigError(
                f"{where}: summary out_dim {self.summary.out_dim} does not match "
                f"reference dimension {reference.dim}"
            )
        self.threshold_cfg = cfg["threshold"]
        self._reference = reference
        self._seed = seed
        self._schedule = None

    def schedule(self) -> ThresholdSchedule:
        if self._schedule is None:
            self._schedule = self._resolve_schedule()
        return self._schedule

    def _resolve_schedule(self) -> ThresholdSchedule:
        cfg = self.threshold_cfg
        where = "detector.threshold"
        _check_keys(
            cfg,
            allowed={
                "policy", "alpha", "value", "n_permutations", "t_max",
                "n_streams", "min_survivors", "path",
            },
            required={"policy"},
            where=where,
        )
        policy = cfg["policy"]
        try:
            if policy == "fixed":
                if "value" not in cfg:
                    raise ConfigError(f"{where}: fixed policy requires value")
                return calibration.fixed_threshold(
                    cfg["value"], self.window, cfg.get("alpha")
                )
            if policy == "ks_asymptotic":
                if self.statistic != KS:
                    raise ConfigError(
                        f"{where}: ks_asymptotic thresholds apply to the ks statistic"
                    )
                return calibration.ks_asymptotic_threshold(
                    self._reference.size, self.window, cfg["alpha"]
                )
            if policy == "permutation":
                return calibration.permutation_threshold(
                    self._reference.concrete(),
                    self.window,
                    cfg["alpha"],
                    _positive_int(cfg["n_permutations"], f"{where}.n_permutations"),
                    statistic=self.statistic,
                    kernel=self.kernel,
                    master_seed=self._seed,
                )
            if policy == "calibrated":
                return calibration.calibrate_schedule(
                    self._reference.concrete(),
                    self.window,
                    CalibrationTarget(alpha=cfg["alpha"]),
                    t_max=_positive_int(cfg["t_max"], f"{where}.t_max"),
                    n_streams=_positive_int(cfg["n_streams"], f"{where}.n_streams"),
                    statistic=self.statistic,
                    kernel=self.kernel,
                    master_seed=self._seed,
                    min_survivors=cfg.get(
                        "min_survivors", calibration.DEFAULT_MIN_SURVIVORS
                    ),
                )
            if policy == "schedule_file":
                with open(cfg["path"], "r", encoding="utf-8") as fh:
                    schedule = ThresholdSchedule.from_json(fh.read())
                if schedule.w != self.window:
                    raise ConfigError(
                        f"{where}: schedule file was built for w={schedule.w}, "
                        f"config window is {self.window}"
                    )
                return schedule
        except KeyError as exc:
            raise ConfigError(f"{where}: policy {policy!r} requires key {exc.args[0]!r}")
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}")
        raise ConfigError(f"{where}: unknown policy {policy!r}")


def _parse_stream(cfg: dict | None) -> ChangePointModel | None:
    if cfg is None:
        return None
    where = "stream"
    _check_keys(cfg, allowed={"pre", "post", "change_point"}, required={"pre"}, where=where)
    pre = _parse_distribution(cfg["pre"], f"{where}.pre")
    post = _parse_distribution(cfg["post"], f"{where}.post") if "post" in cfg else pre
    cp = cfg.get("change_point")
    try:
        return ChangePointModel(
            pre=pre, post=post, change_point=math.inf if cp is None else cp
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}")


class _EvaluationSection:
    def __init__(self, cfg: dict | None, alpha: float | None):
        where = "evaluation"
        cfg = cfg or {}
        _check_keys(cfg, allowed={"n_runs", "cap", "lambda", "workers"}, required=set(), where=where)
        self.n_runs = _positive_int(cfg.get("n_runs", 100), f"{where}.n_runs")
        cap = cfg.get("cap")
        if cap is None:
            if alpha is None:
                raise ConfigError(
                    f"{where}.cap: required when the threshold policy has no alpha"
                )
            cap = int(round(100.0 / alpha))
        self.cap = _positive_int(cap, f"{where}.cap")
        self.lam = cfg.get("lambda")
        if self.lam is not None:
            self.lam = _positive_int(self.lam, f"{where}.lambda")
        self.workers = _positive_int(cfg.get("workers", 1), f"{where}.workers")


# -- artifact writing -------------------------------------------------------


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header: list, rows, hash_: str, seed: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={hash_} seed={seed}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _report_payload(cfg: dict, command: str, report: dict) -> dict:
    return {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "config": cfg,
        "report": report,
    }


# -- commands ---------------------------------------------------------------


def _parse_experiment(cfg: dict):
    seed = cfg["seed"]
    reference = _ReferenceSection(cfg["reference"], seed)
    det = _DetectorSection(cfg["detector"], reference, seed)
    return seed, reference, det


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed, reference, det = _parse_experiment(cfg)
    schedule = det.schedule()
    meta = {"config_hash": config_hash(cfg), "seed": seed}
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(schedule.to_json(meta))
        fh.write("\n")
    kind = schedule.kind
    print(f"wrote {kind} schedule (w={schedule.w}, alpha={schedule.alpha}) to {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed, reference, det = _parse_experiment(cfg)
    schedule = det.schedule()
    ev = _EvaluationSection(cfg.get("evaluation"), schedule.alpha)
    cap = args.cap if args.cap is not None else ev.cap

    config = detector_mod.DetectorConfig(
        reference=reference.concrete(),
        schedule=schedule,
        window_size=det.window,
        statistic=det.statistic,
        summary=det.summary,
        kernel=det.kernel,
    )
    if args.stream_file is not None:
        stream = streams.load_stream_file(args.stream_file)
    else:
        model = _parse_stream(cfg.get("stream"))
        if model is None:
            raise ConfigError("run needs a stream section or --stream-file")
        stream = streams.generate_stream(model, cap, seed, stream_id=0)
    result = detector_mod.run(config, stream, cap, trace=args.trace is not None)

    hash_ = config_hash(cfg)
    payload = _report_payload(
        cfg,
        "run",
        {
            "detection_time": result.detection_time,
            "run_length": result.run_length,
            "censored": result.censored,
            "cap": result.cap,
            "w": result.w,
        },
    )
    _write_json(args.out, payload)
    if args.trace is not None:
        _write_csv(
            args.trace,
            ["t", "statistic", "threshold", "detected"],
            [(t, repr(s), repr(h), str(d).lower()) for t, s, h, d in result.trace],
            hash_,
            seed,
        )
    outcome = (
        f"detection at t={result.detection_time}" if not result.censored else "censored"
    )
    print(f"run: {outcome} (cap={cap}); report written to {args.out}")
    return 0


def cmd_arl(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed, reference, det = _parse_experiment(cfg)
    model = _parse_stream(cfg.get("stream"))
    if model is None:
        raise ConfigError("arl needs a stream section (the null model)")
    if model.change_point != math.inf:
        raise ConfigError("arl measures false detections; stream.change_point must be null")
    schedule = det.schedule()
    ev = _EvaluationSection(cfg.get("evaluation"), schedule.alpha)
    workers = args.workers if args.workers is not None else ev.workers

    kwargs = dict(
        statistic=det.statistic,
        summary=det.summary,
        kernel=det.kernel,
        workers=workers,
        lam=ev.lam,
    )
    if reference.redraw:
        kwargs.update(reference_spec=reference.spec, reference_size=reference.size)
    else:
        kwargs.update(reference=reference.concrete())
    report = evaluation.estimate_arl0(
        schedule, model, ev.n_runs, ev.cap, seed, **kwargs
    )

    payload = _report_payload(cfg, "arl", report.to_dict())
    _write_json(args.out, payload)
    if args.runs_csv is not None:
        _write_csv(
            args.runs_csv,
            ["run_id", "T", "censored"],
            [(i, t, str(c).lower()) for i, t, c in report.runs],
            config_hash(cfg),
            seed,
        )
    print(
        f"arl: mean_T={report.mean_T:.1f} slackness={report.slackness!r} "
        f"censored={report.censored_count}/{report.n_runs}; report written to {args.out}"
    )
    return 0


def cmd_delay(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed, reference, det = _parse_experiment(cfg)
    model = _parse_stream(cfg.get("stream"))
    if model is None or model.change_point == math.inf:
        raise ConfigError("delay needs a stream section with a finite change_point")
    schedule = det.schedule()
    ev = _EvaluationSection(cfg.get("evaluation"), schedule.alpha)
    workers = args.workers if args.workers is not None else ev.workers

    kwargs = dict(
        statistic=det.statistic, summary=det.summary, kernel=det.kernel, workers=workers
    )
    if reference.redraw:
        kwargs.update(reference_spec=reference.spec, reference_size=reference.size)
    else:
        kwargs.update(reference=reference.concrete())
    report = evaluation.estimate_delay(
        schedule, model, ev.n_runs, ev.cap, seed, **kwargs
    )

    payload = _report_payload(cfg, "delay", report.to_dict())
    _write_json(args.out, payload)
    if args.runs_csv is not None:
        _write_csv(
            args.runs_csv,
            ["run_id", "T", "censored"],
            [(i, t, str(c).lower()) for i, t, c in report.runs],
            config_hash(cfg),
            seed,
        )
    delay = "n/a" if report.mean_delay is None else f"{report.mean_delay:.1f}"
    print(
        f"delay: mean_delay={delay} false_alarms={report.false_alarm_fraction:.3f}; "
        f"report written to {args.out}"
    )
    return 0


_APPENDIX_BASE_ALPHA = 0.001
_APPENDIX_BASE_RUNS = 250
_APPENDIX_W_GRID = (100, 200, 300, 400, 500)  # reference size fixed at 3000
_APPENDIX_N_GRID = (300, 1000, 3000, 10000, 30000)  # window fixed at 300


def _appendix_point(seed_entropy, w, n, alpha, n_runs, cap, workers):
    point_seed = int(np.random.SeedSequence(entropy=seed_entropy).generate_state(1)[0])
    schedule = calibration.ks_asymptotic_threshold(n, w, alpha)
    spec = DistributionSpec.gaussian(0.0, 1.0)
    report = evaluation.estimate_arl0(
        schedule,
        streams.null_model(spec),
        n_runs,
        cap,
        point_seed,
        statistic=KS,
        reference_spec=spec,
        reference_size=n,
        workers=workers,
    )
    return report


def cmd_reproduce_appendix(args) -> int:
    if args.scale <= 0:
        raise ConfigError("--scale must be positive")
    alpha = _APPENDIX_BASE_ALPHA / args.scale
    if not alpha < 1.0:
        raise ConfigError(f"--scale {args.scale} drives alpha to {alpha} >= 1")
    n_runs = max(4, round(_APPENDIX_BASE_RUNS * args.scale))
    cap = args.cap if args.cap is not None else int(round(100.0 / alpha))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta_cfg = {
        "seed": args.seed,
        "alpha": alpha,
        "n_runs": n_runs,
        "cap": cap,
        "scale": args.scale,
        "w_grid": list(_APPENDIX_W_GRID),
        "n_grid": list(_APPENDIX_N_GRID),
    }
    hash_ = config_hash(meta_cfg)

    def sweep(points, sweep_id, tag):
        rows = []
        for idx, (w, n) in enumerate(points):
            report = _appendix_point(
                (args.seed, sweep_id, idx), w, n, alpha, n_runs, cap, args.workers
            )
            rows.append(
                (w, n, alpha, repr(report.mean_T), repr(report.standard_error),
                 repr(report.slackness))
            )
            print(
                f"  {tag}: w={w} n={n} mean_T={report.mean_T:.1f} "
                f"slackness={report.slackness:.2f} censored={report.censored_count}"
            )
        return rows

    print(f"sweep over window sizes (n=3000), alpha={alpha}, {n_runs} runs each")
    fig1a = sweep([(w, 3000) for w in _APPENDIX_W_GRID], 1, "fig1a")
    _write_csv(
        out_dir / "fig1a.csv",
        ["w", "n", "alpha", "mean_T", "se", "slackness"],
        fig1a, hash_, args.seed,
    )
    print(f"sweep over reference sizes (w=300), alpha={alpha}, {n_runs} runs each")
    fig1b = sweep([(300, n) for n in _APPENDIX_N_GRID], 2, "fig1b")
    _write_csv(
        out_dir / "fig1b.csv",
        ["w", "n", "alpha", "mean_T", "se", "slackness"],
        fig1b, hash_, args.seed,
    )
    _write_json(out_dir / "meta.json", {"config_hash": hash_, **meta_cfg})
    print(f"wrote fig1a.csv, fig1b.csv, meta.json to {out_dir}")
    return 0


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqshift",
        description="Sequential distribution-shift detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="build and save a threshold schedule")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run the detector once on a stream")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stream-file", default=None, help="read the stream from a file")
    p.add_argument("--trace", default=None, help="write a per-step statistic trace CSV")
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("arl", help="estimate the run length to false detection")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--runs-csv", default=None, help="write the per-run table")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_arl)

    p = sub.add_parser("delay", help="estimate the detection delay after a change")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--runs-csv", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_delay)

    p = sub.add_parser(
        "reproduce-appendix",
        help="slackness sweeps over window and reference sizes",
    )
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--scale",
        type=float,
        default=1.0,
        help="cost scale: effective alpha = 0.001/scale and runs = 250*scale, "
        "so --scale 0.1 is a cheap CI version and --scale 1 the full job",
    )
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=None, help="censoring cap (default 100/alpha)")
    p.set_defaults(func=cmd_reproduce_appendix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
