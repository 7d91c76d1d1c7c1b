from importlib import reload
import logging
import os
import sys

from rich.traceback import install as rich_trace

from perturbeu.app import PerturbEU


if not sys.warnoptions:
    import warnings

    warnings.simplefilter("default")

reload(logging)
logging.basicConfig(
    filename=os.environ.get("PERTURBEU_LOG", "perturbeu.log"), level=logging.INFO
)

rich_trace()

"Perturbed Expected Utility"
