"""Model persistence: JSON save/load with a lossless numeric round trip.

The file carries the temporal structure, both CPTs per variable, the
mixing weights and their adaptation sums, the discount factor, and the
per-column codecs (bin boundaries or label tables). Floats are written
as shortest round-trippable decimal text, so load(save(m)) reproduces
every numeric value bit-exactly.

CPT rows are stored in mixed-radix parent order with the first listed
parent most significant; that order is part of the format.
"""

import json
import math
from typing import NamedTuple

import numpy as np

from .adapt import AlphaState
from .errors import ModelFormatError
from .model import ConvexCpd, Dnm, DnmStructure, LagRef, validate_structure
from .network import Variable
from .preprocess import BinSpec, LabelMap

SCHEMA_VERSION = 1
ROW_DRIFT_TOL = 1e-6
# Below this a row is float-rounding-exact and loads untouched; in between
# it is renormalized (tolerates files written at lower precision).
ROW_EXACT_TOL = 1e-12


class ModelBundle(NamedTuple):
    dnm: Dnm
    codecs: list
    alpha_state: AlphaState


def _codec_fields(codec):
    if isinstance(codec, BinSpec):
        return codec.cuts.tolist(), None
    if isinstance(codec, LabelMap):
        return None, list(codec.labels)
    return None, None


def save_model(path, dnm: Dnm, codecs=None, alpha_state: AlphaState = None) -> None:
    """Write ``dnm`` (and optional codecs / adaptation state) to ``path``."""
    s = dnm.structure
    n = s.n_vars
    codecs = codecs if codecs is not None else [None] * n
    if alpha_state is None:
        alpha_state = AlphaState.fresh(n)
        alpha_state.alpha = dnm.alphas()
    names = [v.name for v in s.variables]
    variables = []
    for i, var in enumerate(s.variables):
        cuts, labels = _codec_fields(codecs[i])
        cpd = dnm.cpds[i]
        variables.append(
            {
                "name": var.name,
                "kind": var.kind,
                "cardinality": var.cardinality,
                "cuts": cuts,
                "labels": labels,
                "representative_values": dnm.values[i].tolist(),
                "empirical_marginal": dnm.marginals[i].tolist(),
                "alpha": float(cpd.alpha),
                "contemporaneous_parents": [
                    [names[ref.var], ref.lag] for ref in s.contemporaneous[i]
                ],
                "lagged_parents": [
                    [names[ref.var], ref.lag] for ref in s.lagged[i]
                ],
                "cpt_contemporaneous": cpd.table_c.tolist(),
                "cpt_lagged": cpd.table_nc.tolist(),
            }
        )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "order": s.order,
        "discount": float(alpha_state.discount),
        "variables": variables,
        "adaptation": {
            "ab_sum": alpha_state.ab_sum.tolist(),
            "b2_sum": alpha_state.b2_sum.tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _check_rows(name, which, table):
    table = np.asarray(table, dtype=float)
    if table.ndim != 2:
        raise ModelFormatError(f"{name}: {which} CPT is not a row table")
    sums = table.sum(axis=1)
    drift = np.abs(sums - 1.0)
    worst = int(np.argmax(drift))
    if drift[worst] > ROW_DRIFT_TOL:
        raise ModelFormatError(
            f"{name}: {which} CPT row {worst} sums to {sums[worst]:.12g}; "
            f"drift above {ROW_DRIFT_TOL} is rejected"
        )
    fix = drift > ROW_EXACT_TOL
    if fix.any():
        table = table.copy()
        table[fix] = table[fix] / sums[fix, None]
    return table


def load_model(path) -> ModelBundle:
    """Read a model file; validates schema version and CPT rows.

    Rows whose sums have drifted by at most ``ROW_DRIFT_TOL`` are
    renormalized; larger drift raises ``ModelFormatError``.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: not valid JSON ({e})") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: schema version {version!r}, this build reads version "
            f"{SCHEMA_VERSION}"
        )
    try:
        order = int(doc["order"])
        discount = float(doc["discount"])
        entries = doc["variables"]
    except KeyError as e:
        raise ModelFormatError(f"{path}: missing field {e}") from None
    names = [e["name"] for e in entries]
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise ModelFormatError(f"{path}: duplicate variable names")

    def resolve(pairs, lag0):
        refs = []
        for name, lag in pairs:
            if name not in index:
                raise ModelFormatError(f"{path}: parent {name!r} is not a variable")
            if lag0 and lag != 0:
                raise ModelFormatError(
                    f"{path}: contemporaneous parent {name!r} has lag {lag}"
                )
            refs.append(LagRef(index[name], int(lag)))
        return tuple(refs)

    variables, contemporaneous, lagged = [], [], []
    cpds, marginals, values, codecs = [], [], [], []
    alphas, ab, b2 = [], [], []
    for e in entries:
        variables.append(Variable(e["name"], int(e["cardinality"]), e["kind"]))
        contemporaneous.append(resolve(e["contemporaneous_parents"], lag0=True))
        lagged.append(resolve(e["lagged_parents"], lag0=False))
        alpha = float(e["alpha"])
        if not 0.0 <= alpha <= 1.0:
            raise ModelFormatError(f"{path}: {e['name']}: alpha {alpha} outside [0, 1]")
        alphas.append(alpha)
        marginals.append(np.asarray(e["empirical_marginal"], dtype=float))
        values.append(np.asarray(e["representative_values"], dtype=float))
        if e.get("cuts") is not None:
            codecs.append(
                BinSpec(np.asarray(e["cuts"], dtype=float), values[-1].copy())
            )
        elif e.get("labels") is not None:
            codecs.append(LabelMap(list(e["labels"])))
        else:
            codecs.append(None)
    for i, e in enumerate(entries):
        table_c = _check_rows(e["name"], "contemporaneous", e["cpt_contemporaneous"])
        table_nc = _check_rows(e["name"], "lagged", e["cpt_lagged"])
        cards = [v.cardinality for v in variables]
        cpds.append(
            ConvexCpd(
                tuple(cards[ref.var] for ref in contemporaneous[i]),
                tuple(cards[ref.var] for ref in lagged[i]),
                table_c,
                table_nc,
                alpha=alphas[i],
            )
        )
    structure = DnmStructure(
        variables=tuple(variables),
        order=order,
        contemporaneous=tuple(contemporaneous),
        lagged=tuple(lagged),
    )
    problems = validate_structure(structure)
    n = len(variables)
    for i in range(n):
        r = variables[i].cardinality
        if cpds[i].table_c.shape[1] != r or cpds[i].table_nc.shape[1] != r:
            problems.append(f"{names[i]}: CPT column count differs from cardinality")
        if len(marginals[i]) != r or len(values[i]) != r:
            problems.append(f"{names[i]}: marginal or value length differs from cardinality")
        if cpds[i].table_c.shape[0] != math.prod(cpds[i].parent_cards_c):
            problems.append(f"{names[i]}: contemporaneous CPT row count mismatch")
        if cpds[i].table_nc.shape[0] != math.prod(cpds[i].parent_cards_nc):
            problems.append(f"{names[i]}: lagged CPT row count mismatch")
    if problems:
        raise ModelFormatError(f"{path}: " + "; ".join(problems))
    adaptation = doc.get("adaptation", {})
    state = AlphaState(
        ab_sum=np.asarray(adaptation.get("ab_sum", [0.0] * n), dtype=float),
        b2_sum=np.asarray(adaptation.get("b2_sum", [0.0] * n), dtype=float),
        alpha=np.asarray(alphas, dtype=float),
        discount=discount,
    )
    dnm = Dnm(
        structure=structure,
        cpds=tuple(cpds),
        marginals=tuple(marginals),
        values=tuple(values),
    )
    return ModelBundle(dnm, codecs, state)
