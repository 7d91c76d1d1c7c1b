from .AxiomOracle import AxiomWitness
from .AxiomOracle import check_psaroeu
from .AxiomOracle import check_psarseu
from .AxiomOracle import check_saroeu
from .AxiomOracle import oracle_min_e
from .utils.sequences import SequenceStats
from .utils.sequences import TestSequence
from .utils.sequences import enumerate_test_sequences
from .utils.sequences import sequence_stats
from .utils.sequences import subjective_exponent
