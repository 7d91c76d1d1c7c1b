import io
import json
import logging
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Set

import numpy as np
import pandas as pd

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import ObjectiveBelief
from perturbeu.data.Dataset import Observation
from perturbeu.data.InputFormats import BudgetCSV
from perturbeu.data.InputFormats import GenericJSON
from perturbeu.utils.errors import ParseError
from perturbeu.utils.errors import ValidationError
from perturbeu.utils.validators import validate_belief
from perturbeu.utils.validators import validate_format


def parse_budget_csv(
    text: str,
    mu: Optional[Sequence[float]] = None,
    tolerance: float = BudgetCSV.BUDGET_TOLERANCE,
    failures: Optional[Dict[str, str]] = None,
) -> List[Dataset]:
    """Parse experiment budget-line data

    Each row `subject,trial,a1,a2,x1,x2` holds the two axis
    intercepts of a budget line and the chosen allocation.
    Prices are normalized to p1 = 1 and p2 = a1 / a2.

    Parameters
    ----------
    text : str
        CSV content with header

    mu : sequence of float, optional
        Objective belief override. Default (0.5, 0.5)

    tolerance : float
        Allowed relative distance from the budget line

    failures : dict, optional
        When given, subjects failing validation are recorded
        here by id and skipped instead of raising

    Returns
    ----------
    List[Dataset]
        One dataset per subject, in order of first appearance

    Raises
    ----------
    ParseError
        missing columns or malformed row

    ValidationError
        non-positive intercept, negative allocation or
        allocation off the budget line

    """
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            index_col=False,
            skipinitialspace=True,
            keep_default_na=False,
        )
    except pd.errors.EmptyDataError as e:
        raise ParseError("no data") from e
    except pd.errors.ParserError as e:
        raise ParseError(str(e).strip()) from e

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in BudgetCSV.COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"missing column(s) {', '.join(missing)}")

    belief = ObjectiveBelief(mu if mu is not None else BudgetCSV.DEFAULT_BELIEF)
    if belief.n_states != 2:
        raise ValidationError("budget-line data has exactly two states")

    numeric = frame[BudgetCSV.NUMERIC + ["trial"]].apply(pd.to_numeric, errors="coerce")
    bad_rows = numeric.index[numeric.isna().any(axis=1)]
    if len(bad_rows):
        row: int = int(bad_rows[0]) + 1
        raise ParseError(f"non-numeric or missing value in {frame.iloc[row - 1].tolist()}", row)

    subjects = frame["subject"].str.strip()
    if (subjects == "").any():
        row = int(np.flatnonzero((subjects == "").to_numpy())[0]) + 1
        raise ParseError("empty subject id", row)

    frame = numeric.assign(subject=subjects)

    datasets: List[Dataset] = []
    for subject_id, rows in frame.groupby("subject", sort=False):
        try:
            datasets.append(_budget_subject(subject_id, rows, belief, tolerance))
        except ValidationError as e:
            if failures is None:
                raise
            failures[subject_id] = str(e)
            logging.warning(f"Skipping subject {subject_id}: {e}")

    return datasets


def _budget_subject(
    subject_id: str, rows: pd.DataFrame, belief: ObjectiveBelief, tolerance: float
) -> Dataset:
    rows = rows.sort_values("trial", kind="mergesort")
    observations: List[Observation] = []

    for _, r in rows.iterrows():
        trial = int(r["trial"])
        a1, a2, x1, x2 = (float(r[c]) for c in BudgetCSV.NUMERIC)

        if a1 <= 0 or a2 <= 0:
            raise ValidationError(
                f"intercepts must be positive, got a1={a1}, a2={a2}", subject_id, trial
            )
        if x1 < 0 or x2 < 0:
            raise ValidationError(
                f"allocation must be non-negative, got ({x1}, {x2})", subject_id, trial
            )

        on_line = x1 / a1 + x2 / a2
        if abs(on_line - 1.0) > tolerance:
            raise ValidationError(
                f"allocation ({x1}, {x2}) is off the budget line "
                f"(x1/a1 + x2/a2 = {on_line:.9g})",
                subject_id,
                trial,
            )

        observations.append(Observation([1.0, a1 / a2], [x1, x2]))

    logging.info(f"Parsed subject {subject_id} with {len(observations)} budget(s)")
    return Dataset(subject_id=subject_id, observations=observations, belief=belief)


def _parse_subject(entry: Dict, index: int) -> Dataset:
    if not isinstance(entry, dict):
        raise ParseError(f"subject {index} is not an object")

    subject_id = str(entry.get(GenericJSON.ID_KEY, index))

    if GenericJSON.BELIEF_KEY not in entry or GenericJSON.OBSERVATIONS_KEY not in entry:
        raise ParseError(
            f"subject {subject_id} needs '{GenericJSON.BELIEF_KEY}' and "
            f"'{GenericJSON.OBSERVATIONS_KEY}'"
        )

    try:
        mu = validate_belief(
            entry[GenericJSON.BELIEF_KEY],
            tolerance=GenericJSON.BELIEF_TOLERANCE,
            renormalize=True,
        )
    except ValidationError as e:
        raise ValidationError(str(e), subject_id) from e

    observations: List[Observation] = []
    for trial, obs in enumerate(entry[GenericJSON.OBSERVATIONS_KEY], start=1):
        try:
            p = np.asarray(obs[GenericJSON.PRICES_KEY], dtype=float)
            x = np.asarray(obs[GenericJSON.QUANTITIES_KEY], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"subject {subject_id}: malformed observation", trial) from e

        if p.shape != mu.shape or x.shape != mu.shape:
            raise ValidationError(
                f"dimension mismatch: mu has {mu.size} states, p {p.shape}, x {x.shape}",
                subject_id,
                trial,
            )
        try:
            observations.append(Observation(p, x))
        except ValidationError as e:
            raise ValidationError(str(e), subject_id, trial) from e

    return Dataset(
        subject_id=subject_id, observations=observations, belief=ObjectiveBelief(mu)
    )


def parse_generic_json(
    text: str, failures: Optional[Dict[str, str]] = None
) -> List[Dataset]:
    """Parse general S-state datasets

    Accepts either {"subjects": [...]}, a bare list of
    subjects or a single subject object. A subject is
    {"id": ..., "mu": [...], "observations": [{"p": [...], "x": [...]}]}.

    A repeated subject id keeps its first occurrence; later ones
    are rejected and recorded as `<id>#<entry index>`.

    Returns
    ----------
    List[Dataset]
        Validated datasets in document order

    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", e.lineno) from e

    if isinstance(document, dict) and GenericJSON.SUBJECTS_KEY in document:
        entries = document[GenericJSON.SUBJECTS_KEY]
    elif isinstance(document, list):
        entries = document
    elif isinstance(document, dict):
        entries = [document]
    else:
        raise ParseError("document must be an object or a list of subjects")

    datasets: List[Dataset] = []
    seen: Set[str] = set()
    for i, entry in enumerate(entries):
        subject_id = str(i)
        if isinstance(entry, dict):
            subject_id = str(entry.get(GenericJSON.ID_KEY, i))
        key = f"{subject_id}#{i}" if subject_id in seen else subject_id
        try:
            if subject_id in seen:
                raise ValidationError(f"duplicate subject id '{subject_id}' in entry {i}")
            seen.add(subject_id)
            datasets.append(_parse_subject(entry, i))
        except (ParseError, ValidationError) as e:
            if failures is None:
                raise
            failures[key] = str(e)
            logging.warning(f"Skipping subject {key}: {e}")

    return datasets


def read_datasets(
    path: str,
    fmt: Optional[str] = None,
    mu: Optional[Sequence[float]] = None,
    failures: Optional[Dict[str, str]] = None,
) -> List[Dataset]:
    """Read datasets from disk

    Format is inferred from the file extension when `fmt`
    is not given. A `mu` override replaces every subject's belief.

    """
    if fmt is None:
        fmt = "json" if str(path).lower().endswith(".json") else "csv"
    fmt = validate_format(fmt)

    with open(path, encoding="utf-8") as f:
        text = f.read()

    if fmt == "csv":
        return parse_budget_csv(text, mu=mu, failures=failures)

    datasets = parse_generic_json(text, failures=failures)
    if mu is not None:
        datasets = [d.with_belief(mu) for d in datasets]
    return datasets
