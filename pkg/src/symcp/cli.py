"""Batch entry point: dataset generation, calibration sweeps, and statistical checks.

Subcommands: ``calibrate``, ``verify``, ``sweep``, ``gen-data``. Exit codes:
0 ok, 1 guaranteed-check failure, 2 config or I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .conformal import calibration_records
from .dataio import (RunManifest, config_hash, export_ethucy, load_ethucy,
                     load_predictions, write_csv, write_report,
                     write_scores_csv)
from .errors import (EmptyDatasetError, IncompletePredictionsError,
                     InvalidInputError, ParseError)
from .groups import ActionConvention, GroupSpec, PIVOT_LAST_OBSERVED
from .predictors import PolynomialRegressor, build_predictor, equivariantize
from .scores import (MODE_PLAIN, MODE_SYMMETRIZED, ScoreSet,
                     check_score_kind, score_arrays, score_batch)
from .synthetic import SyntheticConfig, generate, heading_uniformity
from .validation import as_batches, check_alpha
from .verify import all_guaranteed_ok, run_verification

RESULT_FIELDS = ["dataset", "predictor", "group", "alpha", "split", "m", "k",
                 "q", "coverage", "provenance"]
SUMMARY_FIELDS = ["dataset", "predictor", "group", "alpha", "provenance",
                  "q_mean", "q_std", "coverage_mean", "coverage_std", "splits"]
CHECK_FIELDS = ["check", "params", "lhs", "rhs", "ok", "tolerance", "guaranteed"]


@dataclass
class RunConfig:
    """Key-value run configuration; every key can come from the config file
    (``key = value`` lines, '#' comments) or a flag override."""

    dataset: str = "synthetic"
    invariance: str = "random-rotation"
    n_samples: int = 3000
    noise_sigma: float = 0.05
    speed_min: float = 0.5
    speed_max: float = 1.5
    t_obs: int = 8
    t_pred: int = 12
    stride: int | None = None
    predictor: str = "pose-biased:bx=0.5:by=0.0"
    predictions: str | None = None
    group: str = "c8"
    groups: tuple = ("c4", "c8")
    score: str = "l2"
    alphas: tuple = (0.05,)
    splits: int = 15
    calib_size: int = 999
    train_fraction: float = 0.5
    pivot: str = PIVOT_LAST_OBSERVED
    seed: int = 0
    out: str = "runs"

    def validate(self) -> "RunConfig":
        for alpha in self.alphas:
            check_alpha(alpha)
        if not self.alphas:
            raise InvalidInputError("need at least one alpha")
        if self.splits < 1:
            raise InvalidInputError("splits must be >= 1")
        if self.seed < 0:
            raise InvalidInputError("seed must be >= 0")
        if self.calib_size < 1:
            raise InvalidInputError("calib_size must be >= 1")
        check_score_kind(self.score)
        return self

    def as_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_INT_KEYS = {"n_samples", "t_obs", "t_pred", "stride", "splits", "calib_size", "seed"}
_FLOAT_KEYS = {"noise_sigma", "speed_min", "speed_max", "train_fraction"}


def parse_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(path, line_no, f"expected 'key = value', got {text!r}")
            key, _, raw = text.partition("=")
            values[key.strip()] = raw.strip()
    return values


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key == "alphas":
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if key == "groups":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    return raw


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        file_values = parse_config_file(args.config)
        known = {f.name for f in fields(RunConfig)}
        for key, raw in file_values.items():
            if key not in known:
                raise InvalidInputError(f"unknown config key: {key!r}")
            cfg = replace(cfg, **{key: _coerce(key, raw)})
    overrides = {}
    if getattr(args, "alpha", None):
        overrides["alphas"] = tuple(args.alpha)
    if getattr(args, "splits", None) is not None:
        overrides["splits"] = args.splits
    if getattr(args, "group", None):
        if len(args.group) == 1:
            overrides["group"] = args.group[0]
        overrides["groups"] = tuple(args.group)
    if getattr(args, "predictor", None):
        overrides["predictor"] = args.predictor
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["out"] = args.out
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()


def _load_samples(cfg: RunConfig):
    """Dataset plus an identifying label; synthetic or an ETH-UCY format file."""
    if cfg.dataset == "synthetic":
        syn = SyntheticConfig(
            n_samples=cfg.n_samples, t_obs=cfg.t_obs, t_pred=cfg.t_pred,
            speed_range=(cfg.speed_min, cfg.speed_max),
            noise_sigma=cfg.noise_sigma, invariance=cfg.invariance,
            seed=cfg.seed, pivot=cfg.pivot)
        samples, orbit_index = generate(syn)
        return samples, orbit_index, f"synthetic:{cfg.invariance}:n={len(samples)}"
    samples = load_ethucy(cfg.dataset, cfg.t_obs, cfg.t_pred, cfg.stride)
    return samples, None, cfg.dataset


def _build_base(cfg: RunConfig, samples):
    """Base predictor; trainable predictors consume a leading train split."""
    if cfg.predictions is not None:
        return load_predictions(cfg.predictions, horizon=cfg.t_pred), samples
    base = build_predictor(cfg.predictor, horizon=cfg.t_pred)
    if isinstance(base, PolynomialRegressor):
        n_train = int(round(cfg.train_fraction * len(samples)))
        if not 1 <= n_train < len(samples):
            raise InvalidInputError("train_fraction leaves no usable split")
        perm = np.random.default_rng([cfg.seed, 9999]).permutation(len(samples))
        train = [samples[i] for i in perm[:n_train]]
        rest = [samples[i] for i in perm[n_train:]]
        train_x, train_y = as_batches(train)
        base.fit(train_x, train_y)
        return base, rest
    return base, samples


def _provenance_scores(cfg: RunConfig, base, pool, group_label: str):
    """Plain, equivariantized, and symmetrized score sets on shared samples."""
    past, future = as_batches(pool)
    conv = ActionConvention(cfg.pivot)
    eq = equivariantize(base, GroupSpec.parse(group_label), conv)
    return {
        "plain": score_arrays(cfg.score, base, past, future, MODE_PLAIN),
        "equivariantized": score_arrays(cfg.score, eq, past, future, MODE_PLAIN),
        "symmetrized": score_arrays(cfg.score, eq, past, future, MODE_SYMMETRIZED),
    }


def _manifest(cfg: RunConfig, dataset_id: str) -> RunManifest:
    return RunManifest(
        config_hash=config_hash(cfg.as_mapping()), seed=cfg.seed,
        dataset_id=dataset_id,
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat())


def _summaries(rows) -> list[dict]:
    keyed: dict[tuple, list[dict]] = {}
    for row in rows:
        keyed.setdefault((row["dataset"], row["predictor"], row["group"],
                          row["alpha"], row["provenance"]), []).append(row)
    out = []
    for (dataset, predictor, group, alpha, provenance), group_rows in keyed.items():
        qs = np.array([r["q"] for r in group_rows])
        covs = np.array([r["coverage"] for r in group_rows])
        out.append({
            "dataset": dataset, "predictor": predictor, "group": group,
            "alpha": alpha, "provenance": provenance,
            "q_mean": float(qs.mean()),
            "q_std": float(qs.std(ddof=1)) if len(qs) > 1 else 0.0,
            "coverage_mean": float(covs.mean()),
            "coverage_std": float(covs.std(ddof=1)) if len(covs) > 1 else 0.0,
            "splits": len(group_rows),
        })
    return out


def cmd_calibrate(cfg: RunConfig) -> int:
    samples, _, dataset_id = _load_samples(cfg)
    base, pool = _build_base(cfg, samples)
    if cfg.predictions is not None:
        past, future = as_batches(pool)
        plain = score_batch(cfg.score, base.predict(past, indices=range(len(pool))), future)
        score_sets = {"plain": ScoreSet(plain, "plain", {"predictor": base.tag})}
        print("external predictions: group-averaged provenances unavailable",
              file=sys.stderr)
    else:
        score_sets = _provenance_scores(cfg, base, pool, cfg.group)
    for provenance, score_set in score_sets.items():
        write_scores_csv(score_set, f"{cfg.out}/scores_{provenance}.csv")
    values = {k: v.values for k, v in score_sets.items()}
    raw = calibration_records(values, m=cfg.calib_size, alphas=cfg.alphas,
                              n_splits=cfg.splits, seed=cfg.seed)
    rows = [{"dataset": dataset_id, "predictor": cfg.predictor, "group": cfg.group,
             **rec} for rec in raw]
    manifest = _manifest(cfg, dataset_id)
    write_report(manifest, rows, cfg.out, name="results", fieldnames=RESULT_FIELDS)
    summary = _summaries(rows)
    write_csv(f"{cfg.out}/summary.csv", SUMMARY_FIELDS, summary)
    for row in summary:
        print(f"{row['provenance']:>16}  alpha={row['alpha']:<5} "
              f"Q={row['q_mean']:.4f}±{row['q_std']:.4f} "
              f"cov={row['coverage_mean']:.4f}±{row['coverage_std']:.4f}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    records = run_verification(
        predictor=cfg.predictor, group=cfg.group, score_kind=cfg.score,
        pivot=cfg.pivot, seed=cfg.seed, n_samples=cfg.n_samples,
        t_obs=cfg.t_obs, t_pred=cfg.t_pred, noise_sigma=cfg.noise_sigma,
        speed_range=(cfg.speed_min, cfg.speed_max))
    rows = [r.as_row() for r in records]
    manifest = _manifest(cfg, f"synthetic-verification:{cfg.group}")
    write_report(manifest, rows, cfg.out, name="verification", fieldnames=CHECK_FIELDS)
    for record in records:
        status = "ok " if record.ok else ("FLAGGED" if not record.guaranteed else "FAIL")
        print(f"{status:>8}  {record.check}  lhs={record.lhs:.6g} rhs={record.rhs:.6g}")
    return 0 if all_guaranteed_ok(records) else 1


def cmd_sweep(cfg: RunConfig) -> int:
    if len(cfg.groups) < 2:
        raise InvalidInputError("sweep needs at least two groups")
    samples, _, dataset_id = _load_samples(cfg)
    base, pool = _build_base(cfg, samples)
    if cfg.predictions is not None:
        raise InvalidInputError("sweep needs a live predictor, not external predictions")
    all_rows = []
    for group_label in cfg.groups:
        score_sets = _provenance_scores(cfg, base, pool, group_label)
        values = {k: v.values for k, v in score_sets.items()}
        raw = calibration_records(values, m=cfg.calib_size, alphas=cfg.alphas,
                                  n_splits=cfg.splits, seed=cfg.seed)
        all_rows += [{"dataset": dataset_id, "predictor": cfg.predictor,
                      "group": group_label, **rec} for rec in raw]
    summary = _summaries(all_rows)
    manifest = _manifest(cfg, dataset_id)
    write_report(manifest, all_rows, cfg.out, name="sweep", fieldnames=RESULT_FIELDS)
    write_csv(f"{cfg.out}/sweep_summary.csv", SUMMARY_FIELDS, summary)

    # observed (not asserted) trend of the radius with group richness
    notes = []
    for alpha in cfg.alphas:
        q_by_group = [next(r["q_mean"] for r in summary
                           if r["group"] == g and r["alpha"] == alpha
                           and r["provenance"] == "equivariantized")
                      for g in cfg.groups]
        trend = all(a >= b - 1e-12 for a, b in zip(q_by_group, q_by_group[1:]))
        notes.append(f"alpha={alpha}: equivariantized Q over groups "
                     f"{list(cfg.groups)} = {[round(q, 4) for q in q_by_group]}; "
                     f"nonincreasing with listed richness: {trend}")
    for note in notes:
        print("note:", note)
    write_csv(f"{cfg.out}/sweep_notes.csv", ["note"], [{"note": n} for n in notes])
    return 0


def cmd_gen_data(cfg: RunConfig) -> int:
    samples, orbit_index, dataset_id = _load_samples(cfg)
    if cfg.dataset != "synthetic":
        raise InvalidInputError("gen-data only writes synthetic datasets")
    out_path = f"{cfg.out}/dataset.txt"
    export_ethucy(samples, out_path)
    extra = []
    if orbit_index is not None:
        orbit_path = f"{cfg.out}/orbits.csv"
        write_csv(orbit_path, ["sample_index", "orbit_index"],
                  [{"sample_index": i, "orbit_index": int(o)}
                   for i, o in enumerate(orbit_index)])
        extra.append(orbit_path)
    manifest = _manifest(cfg, dataset_id)
    manifest.artifacts += [out_path] + extra
    write_report(manifest, [{"samples": len(samples), "dataset": dataset_id}],
                 cfg.out, name="gen-data",
                 fieldnames=["samples", "dataset"])
    if len(samples) >= 8:
        statistic, critical, passed = heading_uniformity(samples)
        if not passed:
            print(f"warning: heading uniformity smoke test failed "
                  f"(kuiper={statistic:.4f} > {critical:.4f})", file=sys.stderr)
    print(f"wrote {len(samples)} samples to {out_path}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symcp",
        description="Rotation-symmetrized split conformal prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("calibrate", "conformal quantiles and coverage over random splits"),
            ("verify", "run every statistical check and report pass/fail"),
            ("sweep", "compare groups of increasing richness side by side"),
            ("gen-data", "write a synthetic dataset in the text format")]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="key = value config file")
        cmd.add_argument("--alpha", type=float, action="append",
                         help="miscoverage level; repeatable")
        cmd.add_argument("--splits", type=int, help="number of random calibration splits")
        cmd.add_argument("--group", action="append",
                         help="group label (c4, c8, so2:K=..:seed=..); repeatable for sweep")
        cmd.add_argument("--predictor", help="base predictor tag")
        cmd.add_argument("--seed", type=int, help="run seed")
        cmd.add_argument("--out", help="output directory")
    return parser


_COMMANDS = {"calibrate": cmd_calibrate, "verify": cmd_verify,
             "sweep": cmd_sweep, "gen-data": cmd_gen_data}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except (InvalidInputError, ParseError, EmptyDatasetError,
            IncompletePredictionsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
