import logging

_FORMAT = "[%(name)s] %(message)s"
_installed = False


def get_logger(component: str) -> logging.Logger:
    """Logger con etiqueta de componente, p. ej. ``[DiscourseGraph] ...``."""
    return logging.getLogger(component)


def setup_logging(verbose: bool = False):
    global _installed
    root = logging.getLogger()
    if not _installed:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
        _installed = True
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
