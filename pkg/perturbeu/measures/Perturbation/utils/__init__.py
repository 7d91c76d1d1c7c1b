from .programs import LogLinearProgram
from .programs import build_average_program
from .programs import build_oeu_program
from .programs import build_seu_program
from .programs import solve_program
