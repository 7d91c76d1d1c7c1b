from .SubjectSimulator import BudgetSet
from .SubjectSimulator import bronars_cohort
from .SubjectSimulator import bronars_subject
from .SubjectSimulator import budgets_from_dataset
from .SubjectSimulator import compare_distributions
from .SubjectSimulator import crra_subject
from .SubjectSimulator import draw_price_perturbation
from .SubjectSimulator import perturbed_eu_subject
from .SubjectSimulator import random_budgets
from .SubjectSimulator import simulate_cohort
