from .utils import format_value
