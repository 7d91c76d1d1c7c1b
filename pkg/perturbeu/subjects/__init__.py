from .SubjectAnalysis import ReportRow
from .SubjectAnalysis import SubjectAnalysis
from .SubjectAnalysis import analyze_subject
from .SubjectControl import SubjectControl
