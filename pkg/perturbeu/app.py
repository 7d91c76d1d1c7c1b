"Perturb EU"
from datetime import datetime
import json
import logging
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

import pandas as pd

from perturbeu.data.Dataset import Dataset
from perturbeu.data.utils.readers import read_datasets
from perturbeu.measures.Behavior.BehavioralMetrics import scatter_series
from perturbeu.subjects.SubjectControl import SubjectControl
from perturbeu.utils.config import RunConfig
from perturbeu.utils.utils import format_value
from perturbeu.utils.utils import jsonable

# source name for datasets passed in memory
IN_MEMORY: str = "<memory>"


def format_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Report cells as strings: 6 decimals for floats, NA when missing"""
    return pd.DataFrame(
        [[format_value(None if pd.isna(v) else v) for v in row] for row in frame.itertuples(index=False)],
        columns=frame.columns,
    )


def to_report_csv(frame: pd.DataFrame) -> str:
    return format_frame(frame).to_csv(index=False, lineterminator="\n")


def to_report_json(payload: dict) -> str:
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"


class PerturbEU:
    """
    Control object for orchestrating `SubjectControl` objects,
    one per input file

    Attributes
    ----------
    `config` : RunConfig
        Validated run options, inputs included

    `datasets` : Dict[str, List[Dataset]]
        Parsed subjects keyed by input file

    `failures` : Dict[str, Dict[str, str]]
        Subjects rejected while reading, keyed by input file

    `show_time_stats` : bool
        Print time statistics

    Methods
    -------
    `run()`
        Run all computations to specifications

    `results()`
        Return process results

    `summary()`
        Per input file cohort statistics

    """

    def __init__(
        self,
        inputs: Optional[List[str]] = None,
        config: Optional[RunConfig] = None,
        datasets: Optional[Union[List[Dataset], Dict[str, List[Dataset]]]] = None,
        show_time_stats: Optional[bool] = False,
    ):

        config = config or RunConfig()
        if inputs:
            config = config.with_options(inputs=list(inputs))
        self.config: RunConfig = config
        self.show_time_stats: bool = show_time_stats

        self.datasets: Dict[str, List[Dataset]] = {}
        self.failures: Dict[str, Dict[str, str]] = {}

        for path in self.config.inputs:
            failures: Dict[str, str] = {}
            self.datasets[path] = read_datasets(
                path, fmt=self.config.fmt, mu=self.config.mu, failures=failures
            )
            self.failures[path] = failures
            logging.info(
                f"{path}: {len(self.datasets[path])} subject(s) read, {len(failures)} rejected"
            )

        if isinstance(datasets, dict):
            for k, v in datasets.items():
                self.datasets[k] = self.__with_belief(v)
                self.failures.setdefault(k, {})
        elif datasets:
            self.datasets[IN_MEMORY] = self.__with_belief(datasets)
            self.failures[IN_MEMORY] = {}

        if not self.datasets:
            raise ValueError("Must provide `inputs` or `datasets`")

        self.controls: Dict[str, SubjectControl]

    def __with_belief(self, datasets: List[Dataset]) -> List[Dataset]:
        if self.config.mu is None:
            return list(datasets)
        return [d.with_belief(self.config.mu) for d in datasets]

    @property
    def sources(self) -> List[str]:
        return list(self.datasets.keys())

    @property
    def all_failed(self) -> bool:
        self.__require_run()
        return all(c.all_failed for c in self.controls.values())

    def __str__(self) -> str:
        if not hasattr(self, "controls"):
            return f"<PerturbEU {', '.join(self.sources)} (not run)>"
        return "\n".join(f"{k}\n{v}" for k, v in self.controls.items())

    def __require_run(self) -> None:
        if not hasattr(self, "controls"):
            raise AssertionError("No SubjectControl objects present, call `run()`")

    def run(self) -> None:
        start = datetime.now()

        self.controls = {
            source: SubjectControl(
                datasets=datasets, config=self.config, failures=self.failures[source]
            )
            for source, datasets in self.datasets.items()
        }

        for control in self.controls.values():
            control.run_all(show_time=self.show_time_stats)

        logging.info(f"Run over {len(self.controls)} input(s) finished in {datetime.now() - start}")

    def results(
        self, as_dataframe: Optional[bool] = False, save: bool = False
    ) -> Union[dict, pd.DataFrame]:
        """Report rows of every subject

        Parameters
        ----------
        as_dataframe : bool
            one frame with a leading `source` column

        save : bool
            write `config.output` (CSV) and `config.json_output`

        """
        self.__require_run()

        if save:
            self.save()

        if not as_dataframe:
            return {k: v.results(as_dataframe=False) for k, v in self.controls.items()}

        frames = [
            control.results(as_dataframe=True).assign(source=source)
            for source, control in self.controls.items()
        ]
        combined = pd.concat(frames, ignore_index=True)
        columns = ["source"] + [c for c in combined.columns if c != "source"]
        return combined[columns]

    def summary(self) -> Dict[str, dict]:
        self.__require_run()
        return {k: v.summary() for k, v in self.controls.items()}

    def report_json(self) -> str:
        return to_report_json(
            {
                "inputs": {
                    source: {
                        "subjects": list(control.results(as_dataframe=False).values()),
                        "summary": control.summary(),
                    }
                    for source, control in self.controls.items()
                }
            }
        )

    def save(self, csv_path: Optional[str] = None, json_path: Optional[str] = None) -> None:
        """Write the CSV and JSON reports

        Defaults to `config.output` and `config.json_output`;
        a missing path skips that report.

        """
        self.__require_run()
        csv_path = csv_path or self.config.output
        json_path = json_path or self.config.json_output

        if csv_path:
            with open(csv_path, "w", encoding="utf-8", newline="") as f:
                f.write(to_report_csv(self.results(as_dataframe=True)))
            logging.info(f"CSV report written to {csv_path}")

        if json_path:
            with open(json_path, "w", encoding="utf-8", newline="") as f:
                f.write(self.report_json())
            logging.info(f"JSON report written to {json_path}")

    def scatter(self) -> pd.DataFrame:
        """Scatter series of every two-state subject"""
        frames: List[pd.DataFrame] = []
        for datasets in self.datasets.values():
            for d in sorted(datasets, key=lambda d: d.subject_id):
                if d.S == 2:
                    frames.append(scatter_series(d))

        if not frames:
            return pd.DataFrame(
                columns=[
                    "subject",
                    "trial",
                    "log_price_ratio",
                    "log_quantity_ratio",
                    "log_perturbed_price_ratio",
                ]
            )
        return pd.concat(frames, ignore_index=True)

    def save_scatter(self, path: Optional[str] = None) -> None:
        path = path or self.config.scatter
        if not path:
            raise ValueError("no scatter output path given")
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(to_report_csv(self.scatter()))
        logging.info(f"Scatter series written to {path}")
