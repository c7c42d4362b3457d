from core.exceptions import InputError


class CaseFormatError(InputError):
    """The case file cannot be read as a MATPOWER case"""


class MissingTable(CaseFormatError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"Missing table: {name}")


class MalformedRow(CaseFormatError):
    def __init__(self, table, line, detail=''):
        self.table = table
        self.line = line
        message = f"Malformed row in {table} at line {line}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class NonNumericToken(CaseFormatError):
    def __init__(self, line, column, token=''):
        self.line = line
        self.column = column
        self.token = token
        super().__init__(f"Non-numeric token {token!r} at line {line}, column {column}")


class NetworkError(InputError):
    """The case parses but does not describe a usable DC network"""


class DisconnectedNetwork(NetworkError):
    def __init__(self, n_components):
        self.n_components = n_components
        super().__init__(f"Network is disconnected ({n_components} islands)")


class NoReferenceBus(NetworkError):
    def __init__(self):
        super().__init__("Bus table has no reference bus (type 3)")


class NonpositiveReactance(NetworkError):
    def __init__(self, branch):
        self.branch = branch
        super().__init__(f"Branch {branch} has nonpositive reactance")



class UnknownBus(NetworkError):
    def __init__(self, table, row, bus_id):
        self.table = table
        self.row = row
        self.bus_id = bus_id
        super().__init__(f"{table} row {row} refers to bus {bus_id}, which is not in the bus table")


class CaseEncodingError(CaseFormatError):
    def __init__(self, path, detail=''):
        self.path = path
        super().__init__(f"Case file {path} is not valid UTF-8: {detail}")
