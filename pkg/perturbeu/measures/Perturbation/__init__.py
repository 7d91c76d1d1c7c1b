from .PerturbationSolver import PerturbationSolution
from .PerturbationSolver import average_perturbation_solution
from .PerturbationSolver import min_avg_perturbation
from .PerturbationSolver import min_e_oeu
from .PerturbationSolver import min_e_seu
from .PerturbationSolver import recover_perturbed_dataset
