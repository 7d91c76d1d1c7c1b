import json
from typing import List

import pandas as pd

from perturbeu.data.Dataset import Dataset
from perturbeu.data.InputFormats import BudgetCSV
from perturbeu.data.InputFormats import GenericJSON
from perturbeu.utils.errors import UnsupportedConfigurationError
from perturbeu.utils.validators import validate_format


def to_budget_csv(datasets: List[Dataset]) -> str:
    """Serialize two-state datasets as budget-line rows

    Intercepts are recovered as a_s = I / p_s, so a dataset
    parsed from budget-line data (p1 = 1) round-trips.

    """
    records: list = []
    for d in datasets:
        if d.S != 2:
            raise UnsupportedConfigurationError(
                f"subject {d.subject_id} has {d.S} states, budget-line CSV needs 2"
            )
        for k, obs in enumerate(d.observations):
            income = obs.income
            records.append(
                {
                    "subject": d.subject_id,
                    "trial": k + 1,
                    "a1": income / obs.prices[0],
                    "a2": income / obs.prices[1],
                    "x1": obs.quantities[0],
                    "x2": obs.quantities[1],
                }
            )

    frame = pd.DataFrame.from_records(records, columns=BudgetCSV.COLUMNS)
    return frame.to_csv(index=False, float_format=BudgetCSV.FLOAT_FORMAT, lineterminator="\n")


def to_generic_json(datasets: List[Dataset]) -> str:
    subjects: list = []
    for d in datasets:
        subjects.append(
            {
                GenericJSON.ID_KEY: d.subject_id,
                GenericJSON.BELIEF_KEY: d.mu.tolist(),
                GenericJSON.OBSERVATIONS_KEY: [
                    {
                        GenericJSON.PRICES_KEY: obs.prices.tolist(),
                        GenericJSON.QUANTITIES_KEY: obs.quantities.tolist(),
                    }
                    for obs in d.observations
                ],
            }
        )

    return json.dumps({GenericJSON.SUBJECTS_KEY: subjects}, indent=2) + "\n"


def write_datasets(path: str, datasets: List[Dataset], fmt: str = "csv") -> None:
    fmt = validate_format(fmt)
    text = to_budget_csv(datasets) if fmt == "csv" else to_generic_json(datasets)

    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
