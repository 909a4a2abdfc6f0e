from dataclasses import dataclass
from typing import Optional, Tuple

UNMATCHED = "unmatched"


@dataclass(frozen=True)
class Eventuality:
    """
    Nodo del grafo: secuencia de tokens normalizada (minúsculas, verbos
    lematizados), con su patrón sintáctico y la posición del sujeto.
    """
    tokens: Tuple[str, ...]
    pattern: str = UNMATCHED
    subject_index: Optional[int] = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("Eventuality needs at least one token")
        for tok in self.tokens:
            if not tok or tok != tok.strip() or " " in tok:
                raise ValueError(f"malformed token {tok!r} in {self.tokens!r}")
        if self.subject_index is not None and not (0 <= self.subject_index < len(self.tokens)):
            raise ValueError(f"subject_index {self.subject_index} out of range for {self.tokens!r}")

    @property
    def key(self) -> str:
        return " ".join(self.tokens)

    @property
    def subject(self) -> Optional[str]:
        if self.subject_index is None:
            return None
        return self.tokens[self.subject_index]

    def __len__(self):
        return len(self.tokens)

    def __str__(self):
        return self.key
