from core.exceptions import NumericalError


class SingularSusceptance(NumericalError):
    def __init__(self, detail=''):
        super().__init__(f"Reduced susceptance matrix is singular{': ' + detail if detail else ''}")


class SingularBasis(NumericalError):
    def __init__(self, rows):
        self.rows = tuple(rows)
        super().__init__(f"Active set {list(self.rows)} does not give a nonsingular basis")


class DegenerateUnresolvable(NumericalError):
    def __init__(self, tight_rows, needed):
        self.tight_rows = tuple(tight_rows)
        self.needed = needed
        super().__init__(
            f"Cannot pick {needed} independent rows from the {len(self.tight_rows)} tight rows"
        )
