"""Exception taxonomy shared across the pipeline."""


class FinqaError(Exception):
    """Base class for all package errors."""


# --- corpus ingestion ---

class MissingColumn(FinqaError):
    def __init__(self, column: str):
        super().__init__(f"manifest names column {column!r} absent from header")
        self.column = column


class UnparseableValue(FinqaError):
    def __init__(self, row: int, column: str, raw: str):
        super().__init__(f"row {row}, column {column!r}: {raw!r} is not a decimal number")
        self.row = row
        self.column = column
        self.raw = raw


class DuplicateKey(FinqaError):
    def __init__(self, key: tuple):
        super().__init__(f"two rows share dimension+period key {key!r}")
        self.key = key


class EmptyCorpus(FinqaError):
    pass


class InvalidManifest(FinqaError):
    pass


# --- intent rules ---

class InvalidRuleDocument(FinqaError):
    def __init__(self, message: str, entry=None):
        super().__init__(message)
        self.entry = entry


class EmptyQuery(FinqaError):
    pass


# --- prompt assembly ---

class RefusedIntent(FinqaError):
    pass


class MissingExemplar(FinqaError):
    def __init__(self, intent: str):
        super().__init__(f"no exemplar for intent {intent!r}")
        self.intent = intent


class PromptBudgetError(FinqaError):
    pass


# --- gateway ---

class BackendTimeout(FinqaError):
    pass


class BackendRejected(FinqaError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend rejected request (status {status}): {body[:500]}")
        self.status = status
        self.body = body


class MalformedBackendReply(FinqaError):
    pass


class UnparseablePrompt(FinqaError):
    pass


class UnknownBackend(FinqaError):
    def __init__(self, backend_id: str):
        super().__init__(f"backend {backend_id!r} is not registered")
        self.backend_id = backend_id


# --- ledger ---

class LedgerWriteFailure(FinqaError):
    pass


class UnknownPromptHash(FinqaError):
    def __init__(self, prompt_hash: str):
        super().__init__(f"prompt hash {prompt_hash!r} not present in ledger")
        self.prompt_hash = prompt_hash
