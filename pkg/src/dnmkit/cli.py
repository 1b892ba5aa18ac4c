"""Command-line interface.

Four subcommands cover the pipeline: ``discretize`` fits bin
specifications, ``learn`` fits a model from CSV data, ``forecast`` rolls
a fitted model forward emitting per-step distributions, ``evaluate``
scores forecasts against held-out data and writes a metrics report.
"""

import json
import logging
import sys

import click
import numpy as np

from .errors import DnmError
from .evaluate import rolling_forecast_evaluate
from .learn import build_windows, estimate_cpds, learn_structure
from .model_io import load_model, save_model
from .network import Variable
from .preprocess import BinSpec, ColumnData, LabelMap, TimeSeriesTable, encode_table, load_csv
from . import __version__

log = logging.getLogger("dnmkit")


def _setup_logging(path):
    if path:
        handler = logging.FileHandler(path)
        level = logging.DEBUG
    else:
        handler = logging.StreamHandler(sys.stderr)
        level = logging.WARNING
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(level)


def _common(fn):
    fn = click.option(
        "--inference", type=click.Choice(["exact", "approx"]), default="exact",
        show_default=True, help="posterior computation method",
    )(fn)
    fn = click.option(
        "--samples", type=int, default=5000, show_default=True,
        help="sample count for approximate inference",
    )(fn)
    fn = click.option("--seed", type=int, default=None, help="random seed")(fn)
    fn = click.option(
        "--log", "log_path", type=click.Path(dir_okay=False), default=None,
        help="append log lines to this file instead of stderr",
    )(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Dynamic network models for multivariate time-series forecasting."""


def _load_table(data, categorical):
    cats = tuple(c.strip() for c in categorical.split(",") if c.strip()) if categorical else ()
    return load_csv(data, categorical=cats)


def _raw_matrix(table, codecs):
    """Float matrix of the raw series; categorical labels become their
    state index so adaptation and reports can treat them numerically."""
    out = np.full((table.n_steps, len(table.columns)), np.nan)
    for j, col in enumerate(table.columns):
        if col.kind == "continuous":
            out[:, j] = np.asarray(col.raw, dtype=float)
        else:
            for t, lab in enumerate(col.raw):
                if lab != "":
                    out[t, j] = codecs[j].state_of(lab)
    return out


def _codec_doc(name, kind, codec):
    entry = {"name": name, "kind": kind}
    if isinstance(codec, BinSpec):
        entry["cuts"] = codec.cuts.tolist()
        entry["representative_values"] = codec.representative.tolist()
        entry["n_bins"] = codec.n_bins
    elif isinstance(codec, LabelMap):
        entry["labels"] = list(codec.labels)
        entry["n_states"] = codec.n_states
    return entry


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bins", type=int, default=7, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--categorical", default="", help="comma-separated column names to label-encode")
@_common
def discretize(data, bins, out, categorical, inference, samples, seed, log_path):
    """Fit per-column bin boundaries and write them as JSON."""
    _setup_logging(log_path)
    table = _load_table(data, categorical)
    _, codecs = encode_table(table, n_bins=bins)
    doc = {
        "n_bins": bins,
        "columns": [
            _codec_doc(col.name, col.kind, codec)
            for col, codec in zip(table.columns, codecs)
        ],
    }
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    log.info("discretized %d columns of %s into %s", len(table.columns), data, out)
    click.echo(f"wrote bin spec for {len(table.columns)} columns to {out}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--order", type=int, default=1, show_default=True, help="maximum lag")
@click.option("--bins", type=int, default=7, show_default=True)
@click.option("--max-parents", type=int, default=4, show_default=True)
@click.option("--ordering", default="", help="comma-separated variable names; same-slice arcs point forward in this order")
@click.option("--smoothing", type=float, default=1.0, show_default=True)
@click.option("--train-end", type=int, default=None, help="fit on rows before this index (default: all rows)")
@click.option("--categorical", default="", help="comma-separated column names to label-encode")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_common
def learn(data, order, bins, max_parents, ordering, smoothing, train_end,
          categorical, out, inference, samples, seed, log_path):
    """Learn structure and parameters from a CSV series; write the model."""
    _setup_logging(log_path)
    table = _load_table(data, categorical)
    if train_end is not None:
        # Fit bins on the training prefix only; later rows must not
        # leak into the boundaries.
        table = TimeSeriesTable(
            [ColumnData(c.name, c.kind, c.raw[:train_end]) for c in table.columns],
            table.timestamps[:train_end] if table.timestamps else None,
        )
    states, codecs = encode_table(table, n_bins=bins)
    names = table.names
    if ordering:
        wanted = [n.strip() for n in ordering.split(",")]
        missing = set(wanted) ^ set(names)
        if missing:
            raise click.ClickException(
                f"--ordering must list every column exactly once; mismatch on {sorted(missing)}"
            )
        order_idx = [names.index(n) for n in wanted]
    else:
        order_idx = None
    variables = []
    values = []
    for col, codec in zip(table.columns, codecs):
        if isinstance(codec, BinSpec):
            variables.append(Variable(col.name, codec.n_bins, "continuous"))
            values.append(codec.representative.copy())
        else:
            variables.append(Variable(col.name, codec.n_states, "categorical"))
            values.append(np.arange(codec.n_states, dtype=float))
    cards = [v.cardinality for v in variables]
    records = build_windows(states, cards, order)
    log.info("learning structure from %d records (order %d)", records.n_records, order)
    structure = learn_structure(records, variables, ordering=order_idx, max_parents=max_parents)
    dnm = estimate_cpds(structure, records, smoothing=smoothing, values=values)
    save_model(out, dnm, codecs)
    arcs = sum(
        len(structure.contemporaneous[i]) + len(structure.lagged[i])
        for i in range(len(variables))
    )
    log.info("saved model with %d arcs to %s", arcs, out)
    click.echo(f"learned {arcs} arcs over {len(variables)} variables; model written to {out}")


def _positions(table, *stamps):
    """Map user-facing time values to row positions via the t column."""
    if table.timestamps is None:
        return stamps
    index = {t: i for i, t in enumerate(table.timestamps)}
    out = []
    for s in stamps:
        if s is None:
            out.append(None)
        elif s in index:
            out.append(index[s])
        else:
            raise click.ClickException(f"timestamp {s} not present in the data")
    return tuple(out)


def _origin_label(table, position):
    if table.timestamps is None:
        return position
    if position < len(table.timestamps):
        return table.timestamps[position]
    return table.timestamps[-1] + (position - len(table.timestamps) + 1)


def _write_forecast_csv(path, table, result, cards):
    max_card = max(cards)
    with open(path, "w", newline="") as fh:
        fh.write("t,step,variable,expected," +
                 ",".join(f"p{i}" for i in range(max_card)) + "\n")
        for t, step, name, expected, probs in result.forecast_rows:
            padded = list(probs) + [""] * (max_card - len(probs))
            cells = [str(_origin_label(table, t)), str(step), name, repr(expected)]
            cells += [repr(p) if p != "" else "" for p in padded]
            fh.write(",".join(cells) + "\n")


def _log_audit(result):
    for row in result.audit_rows:
        log.debug(
            "adapt t=%s var=%s a=%s b=%s alpha %.6f -> %.6f (%s)",
            row["t"], row["variable"], row["a"], row["b"],
            row["alpha_before"], row["alpha_after"], row["status"],
        )


def _run_rolling(model_path, data, categorical, origins_pos, horizon, update,
                 theta, inference, samples, seed):
    bundle = load_model(model_path)
    table = _load_table(data, categorical)
    if table.names != [v.name for v in bundle.dnm.structure.variables]:
        raise click.ClickException(
            f"data columns {table.names} do not match model variables "
            f"{[v.name for v in bundle.dnm.structure.variables]}"
        )
    # the model records which columns are label-encoded, so --categorical
    # need not be repeated after learn; reload if the heuristic disagreed
    model_cats = [
        v.name for v, codec in zip(bundle.dnm.structure.variables, bundle.codecs)
        if isinstance(codec, LabelMap)
    ]
    if any(table.column(n).kind != "categorical" for n in model_cats):
        merged = ",".join(sorted(set(model_cats) | set(
            c.strip() for c in categorical.split(",") if c.strip()
        )))
        table = _load_table(data, merged)
    states, _ = encode_table(table, specs=bundle.codecs)
    raw = _raw_matrix(table, bundle.codecs)
    alpha_state = bundle.alpha_state
    alpha_state.discount = theta
    return bundle, table, rolling_forecast_evaluate(
        bundle.dnm, states, raw, origins_pos, horizon=horizon, update=update,
        alpha_state=alpha_state, inference=inference, n_samples=samples, seed=seed,
    )


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--from", "from_t", required=True, type=int, help="first forecast origin")
@click.option("--to", "to_t", type=int, default=None,
              help="last forecast origin (default: --from, a single origin)")
@click.option("--horizon", type=int, default=1, show_default=True)
@click.option("--update", type=click.Choice(["dls", "off"]), default="dls", show_default=True)
@click.option("--theta", type=float, default=0.65, show_default=True,
              help="discount factor for adaptation")
@click.option("--categorical", default="", help="comma-separated column names to label-encode")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_common
def forecast(model_path, data, from_t, to_t, horizon, update, theta, categorical,
             out, inference, samples, seed, log_path):
    """Roll a saved model across origins, writing per-step forecasts."""
    _setup_logging(log_path)
    from_pos, to_pos = _positions(_load_table(data, categorical), from_t, to_t)
    if to_pos is None:
        to_pos = from_pos
    if to_pos < from_pos:
        raise click.ClickException("--to is before --from")
    try:
        bundle, table, result = _run_rolling(
            model_path, data, categorical, range(from_pos, to_pos + 1),
            horizon, update, theta, inference, samples, seed,
        )
    except DnmError as e:
        raise click.ClickException(str(e)) from None
    _log_audit(result)
    cards = bundle.dnm.structure.cardinalities()
    _write_forecast_csv(out, table, result, cards)
    log.info("forecast rows written to %s", out)
    click.echo(
        f"wrote {len(result.forecast_rows)} forecast rows "
        f"({to_pos - from_pos + 1} origins, horizon {horizon}) to {out}"
    )


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--train-end", type=int, required=True,
              help="first row index after the training period")
@click.option("--range", "eval_range", required=True,
              help="origins a:b (half-open) to evaluate")
@click.option("--horizon", type=int, default=1, show_default=True)
@click.option("--update", type=click.Choice(["dls", "off"]), default="dls", show_default=True)
@click.option("--theta", type=float, default=0.65, show_default=True)
@click.option("--categorical", default="", help="comma-separated column names to label-encode")
@click.option("--out", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--forecasts", "forecast_path", type=click.Path(dir_okay=False), default=None)
@_common
def evaluate(model_path, data, train_end, eval_range, horizon, update, theta,
             categorical, report_path, forecast_path, inference, samples, seed, log_path):
    """Score rolling forecasts against held-out observations."""
    _setup_logging(log_path)
    try:
        a_str, b_str = eval_range.split(":")
        a, b = int(a_str), int(b_str)
    except ValueError:
        raise click.ClickException(f"--range must be a:b, got {eval_range!r}") from None
    table = _load_table(data, categorical)
    a_pos, b_pos, train_pos = _positions(table, a, b, train_end)
    if a_pos < train_pos:
        raise click.ClickException(
            f"evaluation range starts at {a} but training covered rows before {train_end}"
        )
    if b_pos <= a_pos:
        raise click.ClickException(f"empty evaluation range {eval_range}")
    try:
        bundle, table, result = _run_rolling(
            model_path, data, categorical, range(a_pos, b_pos),
            horizon, update, theta, inference, samples, seed,
        )
    except DnmError as e:
        raise click.ClickException(str(e)) from None
    _log_audit(result)
    result.report["train_end"] = train_end
    with open(report_path, "w") as fh:
        json.dump(result.report, fh, indent=2)
        fh.write("\n")
    if forecast_path:
        _write_forecast_csv(forecast_path, table, result,
                            bundle.dnm.structure.cardinalities())
    log.info("report written to %s", report_path)
    lines = [f"evaluated {b_pos - a_pos} origins at horizon {horizon}"]
    for name, block in result.report["variables"].items():
        head = block["per_step"][0]
        if block["kind"] == "categorical":
            lines.append(f"  {name}: step-1 accuracy {head['accuracy']:.3f}")
        elif head.get("mape") is not None:
            lines.append(
                f"  {name}: step-1 MPE {head['mpe']:+.4f} MAPE {head['mape']:.4f}"
            )
    click.echo("\n".join(lines))


if __name__ == "__main__":
    main()
