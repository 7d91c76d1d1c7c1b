"Distance measures from expected utility and rationality"
