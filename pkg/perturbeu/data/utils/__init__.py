from .readers import parse_budget_csv
from .readers import parse_generic_json
from .readers import read_datasets
from .writers import to_budget_csv
from .writers import to_generic_json
from .writers import write_datasets
