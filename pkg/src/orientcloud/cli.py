"""Command-line entry point.

Every subcommand writes its outputs plus a resolved ``config.json`` into
``--out-dir``. Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical
failure; errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import behavior as bh
from . import synth
from .config import Config
from .core import DataError, GeometryError, angle_diff, normalize_angle, parse_session
from .features import DEFAULT_SCHEMA, read_feature_csv, write_feature_csv
from .learn import (Dataset, SchemaMismatch, TrainingDiverged, derive_seed, fit_model,
                    leave_one_subject_out, load_bundle, predict, rf_rfe, save_bundle,
                    stratified_split)
from .pipeline import FeatureTable, build_feature_table, process_session

log = logging.getLogger("orientcloud")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------------ file helpers

def write_csv(path, rows, fields=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k, "")) for k in fields})
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ";".join(map(str, v))
    return "" if v is None else v


def write_json(path, obj) -> Path:
    return bh.write_json(obj, path)


def _sessions_from(args) -> dict:
    """Sessions named by ``--data DIR`` (``sessions/*.jsonl``) or ``--session``."""
    if getattr(args, "data", None):
        d = Path(args.data)
        files = sorted((d / "sessions").glob("*.jsonl")) or sorted(d.glob("*.jsonl"))
        if not files:
            raise DataError(f"{d}: no session files")
    elif getattr(args, "session", None):
        files = [Path(p) for p in args.session]
    else:
        raise UsageError("give --data DIR or --session FILE")
    return {f.stem: parse_session(f) for f in files}


def _labels_from(args):
    if getattr(args, "labels", None):
        return synth.read_labels(args.labels)
    if getattr(args, "data", None) and (Path(args.data) / "labels.csv").exists():
        return synth.read_labels(Path(args.data) / "labels.csv")
    return None


def _write_features(table: FeatureTable, path) -> Path:
    return write_feature_csv(path, table.meta, table.X, table.schema)


def _dataset_from_csv(path) -> tuple[Dataset, list[dict]]:
    meta, X, schema = read_feature_csv(path)
    y = np.array([m["head_yaw"] for m in meta], dtype=float)
    ok = np.isfinite(y)
    if not ok.any():
        raise DataError(f"{path}: no labelled rows")
    groups = np.array([m["subject"] for m in meta])
    data = Dataset(X[ok], normalize_angle(y[ok]), groups[ok], schema, np.flatnonzero(ok))
    return data, [m for m, k in zip(meta, ok) if k]


def _features_path(args, out: Path, cfg: Config) -> Path:
    """Feature CSV from ``--features`` or extracted from ``--data``/``--session``."""
    if getattr(args, "features", None):
        return Path(args.features)
    sessions = _sessions_from(args)
    table = build_feature_table(sessions, _labels_from(args), cfg)
    path = _write_features(table, out / "features.csv")
    write_json(out / "features_skipped.json", table.skipped)
    return path


# ------------------------------------------------------------------ subcommands

def cmd_synth(args, cfg: Config, out: Path) -> dict:
    seed = cfg.seed
    if args.kind == "benchmark":
        bench = synth.generate_benchmark(args.subjects, (args.min_frames, args.max_frames),
                                         seed=seed, noise_sigma=args.noise,
                                         outlier_fraction=args.outliers)
        bench.write(out)
        return {"kind": "benchmark", "frames": bench.n_frames,
                "subjects": len(bench.sessions)}
    if args.kind == "sweep":
        session, truths = synth.generate_sweep(args.step, seed, noise_sigma=args.noise,
                                               outlier_fraction=args.outliers)
        synth.write_session(session, out / "sweep.jsonl")
        write_csv(out / "sweep_truth.csv",
                  [{"frame": k, "t": f.timestamp, "subject": "S1", "body_yaw": tr.body_yaw,
                    "head_yaw": tr.head_yaw} for k, (f, tr) in
                   enumerate(zip(session.frames, truths))])
        return {"kind": "sweep", "frames": len(truths)}
    if args.kind == "conversation":
        if args.script:
            script = [(float(d), t if t in ("I1", "I2", "MID") else float(t), sp)
                      for d, t, sp in json.loads(Path(args.script).read_text())]
        else:
            script = synth.random_script(np.random.default_rng(seed), args.duration)
        conv = synth.generate_conversation(script, args.setup, seed, clouds=args.clouds)
        conv.write(out, args.name)
        return {"kind": "conversation", "frames": len(conv.yaw),
                "contacts": conv.expected["n_contacts"],
                "exclusions": conv.expected["n_exclusions"]}
    study = synth.generate_study(args.per_group, setup=args.setup, seed=seed,
                                 duration=args.duration)
    synth.write_study(study, out)
    return {"kind": "study", "sessions": sum(len(v) for v in study.values())}


def _frame_rows(name, results):
    rows = []
    for r in results:
        row = {"session": name, "frame": r.index, "t": r.timestamp, "subject": r.subject_id,
               "status": r.status, "n_roi": r.n_roi, "flags": ";".join(r.flags)}
        if r.head is not None:
            row.update(z_head=r.head.z_head, head_x=r.head.head_center[0],
                       head_y=r.head.head_center[1])
        if r.split is not None:
            row.update(n_head=len(r.split.pc_head), n_body=len(r.split.pc_body))
        if r.body is not None:
            row.update(body_yaw=r.body.yaw, body_tie=int(r.body.tie))
        if r.validation is not None:
            row.update(discrepancy_xy=r.validation.head_discrepancy_xy,
                       discrepancy_z=r.validation.head_discrepancy_z)
        rows.append(row)
    return rows


FRAME_FIELDS = ["session", "frame", "t", "subject", "status", "n_roi", "n_head", "n_body",
                "z_head", "head_x", "head_y", "discrepancy_xy", "discrepancy_z",
                "body_yaw", "body_tie", "flags"]


def cmd_preprocess(args, cfg, out) -> dict:
    rows = []
    for name, sess in _sessions_from(args).items():
        rows += _frame_rows(name, process_session(sess, args.subject, cfg, features=False))
    write_csv(out / "frames.csv", rows, FRAME_FIELDS)
    status = {}
    for r in rows:
        status[r["status"]] = status.get(r["status"], 0) + 1
    return {"frames": len(rows), "status": status}


def cmd_fit_body(args, cfg, out) -> dict:
    rows = []
    for name, sess in _sessions_from(args).items():
        rows += _frame_rows(name, process_session(sess, args.subject, cfg, features=False))
    fields = ["session", "frame", "t", "subject", "status", "body_yaw", "body_tie"]
    summary = {"frames": len(rows), "usable": sum(r["status"] == "ok" for r in rows)}
    if args.truth:
        truth = {(int(t["frame"]), t["subject"]): float(t["body_yaw"])
                 for t in read_csv(args.truth)}
        errs = []
        for r in rows:
            tr = truth.get((r["frame"], r["subject"]))
            if tr is not None and "body_yaw" in r:
                r["body_yaw_true"] = tr
                r["error"] = float(angle_diff(r["body_yaw"], tr))
                errs.append(abs(r["error"]))
        fields += ["body_yaw_true", "error"]
        summary["mae"] = float(np.mean(errs)) if errs else None
    write_csv(out / "body_yaw.csv", rows, fields)
    write_json(out / "body_yaw_summary.json", summary)
    return summary


def cmd_extract_features(args, cfg, out) -> dict:
    table = build_feature_table(_sessions_from(args), _labels_from(args), cfg)
    _write_features(table, out / "features.csv")
    write_json(out / "features_skipped.json", table.skipped)
    return {"rows": len(table.meta), "dims": len(table.schema), "schema": table.schema.hash,
            "skipped": table.skipped}


def cmd_rfe(args, cfg, out) -> dict:
    data, _ = _dataset_from_csv(_features_path(args, out, cfg))
    val = stratified_split(data.groups, cfg.val_fraction, derive_seed(cfg.seed, 1))
    trace = rf_rfe(data.X[~val], data.y[~val], data.X[val], data.y[val], cfg.rfe_step,
                   derive_seed(cfg.seed, 2), cfg.rf_trees, cfg.rf_min_leaf)
    write_csv(out / "rfe_trace.csv", trace.to_rows(data.schema.names),
              ["n_features", "val_mae", "eliminated"])
    sel = [data.schema.names[i] for i in trace.selected]
    write_json(out / "rfe_selected.json", {"selected": sel, "schema": data.schema.hash})
    return {"n_selected": len(sel), "val_mae_full": trace.maes[0],
            "val_mae_selected": trace.mae_at(len(sel)), "val_mae_one": trace.maes[-1]}


def _selected_from(args, schema):
    if not getattr(args, "selected", None):
        return None
    obj = json.loads(Path(args.selected).read_text(encoding="utf-8"))
    if obj.get("schema") not in (None, schema.hash):
        raise SchemaMismatch("selected-feature file was made for another schema")
    return tuple(schema.names.index(n) for n in obj["selected"])


def cmd_train(args, cfg, out) -> dict:
    data, _ = _dataset_from_csv(_features_path(args, out, cfg))
    res = fit_model(data, cfg, cfg.seed, _selected_from(args, data.schema))
    save_bundle(res.ensemble, out / "model.json")
    if res.rfe is not None:
        write_csv(out / "rfe_trace.csv", res.rfe.to_rows(data.schema.names),
                  ["n_features", "val_mae", "eliminated"])
    ens = res.ensemble
    return {"ensemble_size": len(ens), "n_features": len(ens.selected),
            "val_mae": ens.val_mae, "val_mae_initial": ens.initial_val_mae}


def cmd_evaluate(args, cfg, out) -> dict:
    path = _features_path(args, out, cfg)
    data, meta = _dataset_from_csv(path)
    result = leave_one_subject_out(data, cfg, _selected_from(args, data.schema))
    fields = ["subject", "n_test", "mae", "ensemble_size", "n_features",
              "val_mae_initial", "val_mae_final"]
    write_csv(out / "loso_per_subject.csv", result.table(), fields)
    rfe_rows, pred_rows = [], []
    for f in result.folds:
        if f.rfe is not None:
            for r in f.rfe.to_rows(data.schema.names):
                rfe_rows.append({"subject": f.subject, **r})
        rows = [m for m in meta if m["subject"] == f.subject]
        for m, p, y in zip(rows, f.predictions, f.labels):
            pred_rows.append({"session": m["session"], "frame": m["frame"],
                              "subject": f.subject, "head_yaw": float(y),
                              "predicted": float(p), "error": float(angle_diff(p, y))})
    if rfe_rows:
        write_csv(out / "rfe_traces.csv", rfe_rows,
                  ["subject", "n_features", "val_mae", "eliminated"])
    write_csv(out / "predictions.csv", pred_rows)
    final = fit_model(data, cfg, derive_seed(cfg.seed, 999), _selected_from(args, data.schema))
    save_bundle(final.ensemble, out / "model.json")
    report = {
        "overall_mae": result.overall_mae,
        "per_subject": result.per_subject,
        "excluded_subjects": result.excluded,
        "ensemble_sizes": {f.subject: f.ensemble_size for f in result.folds},
        "n_features": {f.subject: f.n_selected for f in result.folds},
        "val_mae": {f.subject: [f.initial_val_mae, f.final_val_mae] for f in result.folds},
        "rows": len(data),
        "schema": data.schema.hash,
    }
    write_json(out / "loso.json", report)
    return {"overall_mae": result.overall_mae, "folds": len(result.folds)}


def cmd_infer(args, cfg, out) -> dict:
    ens = load_bundle(args.model)
    if args.features:
        meta, X, schema = read_feature_csv(args.features)
    else:
        table = build_feature_table(_sessions_from(args), None, cfg)
        meta, X, schema = table.meta, table.X, table.schema
    pred = predict(ens, X, schema)
    rows = []
    for m, p in zip(meta, pred):
        row = {"session": m["session"], "frame": m["frame"], "t": m["t"],
               "subject": m["subject"], "head_yaw_body": float(p),
               "head_yaw_room": float(normalize_angle(m["body_yaw_est"] + p))}
        if args.subject_zero is not None:
            row["head_yaw"] = float(normalize_angle(m["body_yaw_est"] + p - args.subject_zero))
        rows.append(row)
    write_csv(out / "predictions.csv", rows)
    return {"rows": len(rows)}


def _conversation_yaw(meta_path: Path, meta: dict, args, cfg):
    """``(times, yaw)`` of the subject, from a model when given, else the yaw CSV."""
    base = meta_path.parent
    if getattr(args, "model", None):
        ens = load_bundle(args.model)
        sess = parse_session(base / meta["session"])
        table = build_feature_table({"s": sess}, None, cfg)
        keep = [k for k, m in enumerate(table.meta) if m["subject"] == meta["subject"]]
        if not keep:
            raise DataError(f"{meta_path}: no usable frames for {meta['subject']}")
        pred = predict(ens, table.X[keep], table.schema)
        body = np.array([table.meta[k]["body_yaw_est"] for k in keep])
        t = np.array([table.meta[k]["t"] for k in keep])
        return t, normalize_angle(body + pred - meta["subject_zero"])
    rows = [r for r in read_csv(base / meta["yaw"]) if r["subject"] == meta["subject"]]
    return (np.array([float(r["t"]) for r in rows]),
            np.array([float(r["head_yaw"]) for r in rows]))


def _analyze_one(meta_path: Path, args, cfg, group=None) -> bh.SessionAnalysis:
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if "positions" in meta and "I1" in meta["positions"]:
        pos = meta["positions"]
        refs = bh.reference_angles(pos[meta["subject"]], pos["I1"], pos["I2"],
                                   meta["subject_zero"])
    else:
        refs = bh.ReferenceAngles.from_angles(*meta["reference_angles"])
    t, yaw = _conversation_yaw(meta_path, meta, args, cfg)
    speakers = None
    if meta.get("roles"):
        speakers = bh.align_roles(t, bh.read_roles(meta_path.parent / meta["roles"]))
    res = bh.analyze_session(meta_path.stem, t, yaw, refs, speakers, cfg, group,
                             meta.get("setup"))
    exp_name = meta.get("expected")
    if exp_name and (meta_path.parent / exp_name).exists() and not getattr(args, "model", None):
        exp = json.loads((meta_path.parent / exp_name).read_text(encoding="utf-8"))
        got_c = [{"target": e.target, "start": e.start, "end": e.end}
                 for e in res.contacts.events]
        got_e = [{"excluded": e.target, "start": e.start, "end": e.end}
                 for e in res.exclusions.events]
        res.extra["matches_expected"] = (got_c == exp["contacts"] and got_e == exp["exclusions"])
    return res


def cmd_analyze(args, cfg, out) -> dict:
    src = Path(args.input)
    obj = json.loads(src.read_text(encoding="utf-8"))
    analyses = []
    if "groups" in obj:
        for g in sorted(obj["groups"]):
            for name in obj["groups"][g]:
                analyses.append(_analyze_one(src.parent / name, args, cfg, g))
    else:
        analyses.append(_analyze_one(src, args, cfg))

    stat_rows, role_rows, event_rows = [], [], []
    for a in analyses:
        stat_rows.append({"session": a.name, "group": a.group or "", **a.statistics()})
        for e in a.contacts.events:
            event_rows.append({"session": a.name, "kind": "contact", **e.to_json()})
        for e in a.exclusions.events:
            event_rows.append({"session": a.name, "kind": "exclusion", **e.to_json()})
        if a.roles is not None:
            for table, rows in (("listening", bh.LISTENING_ROWS), ("speaking", bh.SPEAKING_ROWS)):
                vals = getattr(a.roles, table)
                role_rows.append({"session": a.name, "group": a.group or "", "table": table,
                                  **{r: vals[r] for r in rows}})
    write_csv(out / "session_statistics.csv", stat_rows,
              ["session", "group", *bh.CONTACT_ROWS, *bh.EXCLUSION_ROWS])
    write_csv(out / "events.csv", event_rows,
              ["session", "kind", "target", "start", "end", "start_time", "end_time", "duration"])
    if role_rows:
        write_csv(out / "role_tables.csv", role_rows,
                  ["session", "group", "table", *bh.LISTENING_ROWS, *bh.SPEAKING_ROWS])
    report = {"sessions": [a.to_json() for a in analyses]}
    groups = sorted({a.group for a in analyses if a.group})
    if len(groups) == 2:
        alt = "two-sided" if cfg.two_sided else args.alternative
        cmp = bh.compare_sessions(analyses, groups[0], groups[1], alt)
        write_csv(out / "group_comparison.csv",
                  [{"statistic": k, **{f"mean_{groups[0]}": v.mean1, f"mean_{groups[1]}": v.mean2},
                    "t": v.t_statistic, "p": v.p_value, "df": v.df, "cohens_d": v.cohens_d}
                   for k, v in cmp.items()],
                  ["statistic", f"mean_{groups[0]}", f"mean_{groups[1]}", "t", "p", "df",
                   "cohens_d"])
        report["comparison"] = {"groups": groups, "alternative": alt,
                                "rows": {k: v.to_json() for k, v in cmp.items()}}
    write_json(out / "analysis.json", report)
    summary = {"sessions": len(analyses),
               "contacts": sum(len(a.contacts.events) for a in analyses),
               "exclusions": sum(len(a.exclusions.events) for a in analyses)}
    matched = [a.extra["matches_expected"] for a in analyses if "matches_expected" in a.extra]
    if matched:
        summary["matches_expected"] = all(matched)
    return summary


def cmd_report(args, cfg, out) -> dict:
    """Plot-data CSVs and PNG figures from an ``evaluate`` and/or ``analyze`` run."""
    from . import plotting

    made = []
    run = Path(args.run)
    traces_path = run / "rfe_traces.csv"
    if traces_path.exists():
        traces = {}
        for r in read_csv(traces_path):
            d, m = traces.setdefault(r["subject"], ([], []))
            d.append(int(r["n_features"]))
            m.append(float(r["val_mae"]))
        dims = sorted({tuple(v[0]) for v in traces.values()})
        if len(dims) == 1:
            mean = np.mean([v[1] for v in traces.values()], axis=0)
            write_csv(out / "rfe_curve.csv",
                      [{"n_features": d, "mean_val_mae": float(m)} for d, m in zip(dims[0], mean)])
        made.append(plotting.rfe_curve(traces, out / "rfe_curve.png"))
    loso_path = run / "loso_per_subject.csv"
    if loso_path.exists():
        rows = read_csv(loso_path)
        subj = [r for r in rows if r["subject"] != "mean"]
        overall = next(float(r["mae"]) for r in rows if r["subject"] == "mean")
        write_csv(out / "per_subject_mae.csv",
                  [{"subject": r["subject"], "mae": float(r["mae"])} for r in subj]
                  + [{"subject": "mean", "mae": overall}])
        made.append(plotting.per_subject_mae([r["subject"] for r in subj],
                                             [float(r["mae"]) for r in subj],
                                             out / "per_subject_mae.png", overall))
    pred_path = run / "predictions.csv"
    if pred_path.exists():
        rows = read_csv(pred_path)
        if rows and "predicted" in rows[0]:
            made.append(plotting.yaw_scatter([float(r["head_yaw"]) for r in rows],
                                             [float(r["predicted"]) for r in rows],
                                             out / "yaw_scatter.png"))
    cmp_path = run / "group_comparison.csv"
    if cmp_path.exists():
        rows = read_csv(cmp_path)
        mean_cols = [c for c in rows[0] if c.startswith("mean_")] if rows else []
        if len(mean_cols) == 2:
            made.append(plotting.group_bars(
                {r["statistic"]: (float(r[mean_cols[0]]), float(r[mean_cols[1]])) for r in rows
                 if r["statistic"] in bh.CONTACT_ROWS + bh.EXCLUSION_ROWS},
                (mean_cols[0][5:], mean_cols[1][5:]), out / "group_means.png"))
    if not made:
        raise DataError(f"{run}: nothing to report (no evaluate or analyze outputs)")
    summary = {"figures": [p.name for p in made]}
    for name in ("loso.json", "analysis.json"):
        if (run / name).exists():
            summary[name.split(".")[0]] = json.loads((run / name).read_text(encoding="utf-8"))
    write_json(out / "report.json", summary)
    return {"figures": len(made)}


# ------------------------------------------------------------------ parser

def _add_inputs(p, features=False, labels=True):
    p.add_argument("--data", help="directory with sessions/*.jsonl and labels.csv")
    p.add_argument("--session", nargs="+", help="session file(s)")
    if labels:
        p.add_argument("--labels", help="label CSV")
    if features:
        p.add_argument("--features", help="feature CSV (skips extraction)")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="config file (JSON or key = value)")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--workers", type=int, help="parallel workers (overrides config)")
    common.add_argument("--out-dir", default="out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="orientcloud", description="Head and body yaw from ceiling "
                     "depth-sensor point clouds, plus conversation attention analysis.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic data")
    kind = p.add_mutually_exclusive_group(required=True)
    for k in ("benchmark", "sweep", "conversation", "study"):
        kind.add_argument(f"--{k}", dest="kind", action="store_const", const=k)
    p.add_argument("--subjects", type=int, default=12)
    p.add_argument("--min-frames", type=int, default=90)
    p.add_argument("--max-frames", type=int, default=125)
    p.add_argument("--noise", type=float, default=None, help="noise sigma mm")
    p.add_argument("--outliers", type=float, default=None, help="outlier fraction")
    p.add_argument("--step", type=float, default=10.0, help="sweep step in degrees")
    p.add_argument("--setup", choices=sorted(synth.SETUPS), default="Setup90")
    p.add_argument("--script", help="JSON list of [duration_s, target, speaker]")
    p.add_argument("--duration", type=float, default=240.0)
    p.add_argument("--per-group", type=int, default=6)
    p.add_argument("--clouds", action="store_true", help="render subject clouds")
    p.add_argument("--name", default="conversation")

    p = sub.add_parser("preprocess", parents=[common], help="per-frame cleaning report")
    _add_inputs(p, labels=False)
    p.add_argument("--subject")

    p = sub.add_parser("fit-body", parents=[common], help="body yaw per frame")
    _add_inputs(p, labels=False)
    p.add_argument("--subject")
    p.add_argument("--truth", help="CSV with frame, subject, body_yaw for scoring")

    p = sub.add_parser("extract-features", parents=[common], help="feature CSV")
    _add_inputs(p)

    p = sub.add_parser("rfe", parents=[common], help="RF-RFE trace on all rows")
    _add_inputs(p, features=True)

    p = sub.add_parser("train", parents=[common], help="train an ensemble bundle")
    _add_inputs(p, features=True)
    p.add_argument("--selected", help="JSON with selected feature names (skips RFE)")

    p = sub.add_parser("evaluate", parents=[common], help="leave-one-subject-out evaluation")
    _add_inputs(p, features=True)
    p.add_argument("--selected", help="JSON with selected feature names (skips RFE)")

    p = sub.add_parser("infer", parents=[common], help="predict head yaw")
    _add_inputs(p, features=True, labels=False)
    p.add_argument("--model", required=True)
    p.add_argument("--subject-zero", type=float, help="subject zero direction in degrees")

    p = sub.add_parser("analyze", parents=[common], help="contact / exclusion analysis")
    p.add_argument("input", help="conversation meta JSON or manifest with groups")
    p.add_argument("--model", help="estimate yaw from clouds with this bundle")
    p.add_argument("--alternative", choices=["greater", "less"], default="greater",
                   help="one-sided alternative used when two_sided is off")

    p = sub.add_parser("report", parents=[common], help="plot data and figures")
    p.add_argument("--run", required=True, help="directory of an evaluate/analyze run")
    return parser


COMMANDS = {
    "synth": cmd_synth, "preprocess": cmd_preprocess, "fit-body": cmd_fit_body,
    "extract-features": cmd_extract_features, "rfe": cmd_rfe, "train": cmd_train,
    "evaluate": cmd_evaluate, "infer": cmd_infer, "analyze": cmd_analyze, "report": cmd_report,
}


def _resolve_config(args) -> Config:
    cfg = Config.load(args.config) if args.config else Config()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        over["workers"] = args.workers
    return cfg.replace(**over) if over else cfg


def _fail(code: int, kind: str, exc) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        if args.command == "synth":
            args.noise = 8.0 if args.noise is None else args.noise
            args.outliers = 0.02 if args.outliers is None else args.outliers
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _resolve_config(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, "config", exc)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        cfg.snapshot(out / "config.json")
        summary = COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (TrainingDiverged, GeometryError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", exc)
    except (DataError, SchemaMismatch, OSError, KeyError, ValueError) as exc:
        return _fail(EXIT_DATA, "data", exc)
    print(json.dumps({"command": args.command, **summary}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
