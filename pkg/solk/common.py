import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
CONFIG_PATH = ROOT / "config" / "solk.json"
CORPUS_DIR = ROOT / "corpus"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AXIOM = 2
EXIT_RESOURCE = 3


class SolkError(RuntimeError):
    exit_code = EXIT_USAGE


class PresentationError(SolkError):
    pass


class PresentationSyntaxError(PresentationError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ResourceCapError(SolkError):
    exit_code = EXIT_RESOURCE

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class PrecisionError(ResourceCapError):
    pass


class AxiomGateError(SolkError):
    exit_code = EXIT_AXIOM

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def load_config_json(path=None):
    with Path(path or CONFIG_PATH).open("r", encoding="utf-8") as f:
        return json.load(f)


def read_text(path):
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise PresentationError(f"cannot read {path}: {e.strerror or e}") from e
    except UnicodeDecodeError as e:
        raise PresentationError(f"cannot read {path}: not valid UTF-8 at byte {e.start}") from e


def dump_json(payload):
    return json.dumps(payload, ensure_ascii=False, indent=2)


def parse_rational(value):
    try:
        q = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise SolkError(f"not a rational number: {value!r}") from e
    return q


def format_fraction(q):
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_int_vector(text):
    parts = [p for p in str(text).replace(",", " ").split() if p]
    try:
        return tuple(int(p) for p in parts)
    except ValueError as e:
        raise SolkError(f"not an integer vector: {text!r}") from e


def setup_logging(verbose=False):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
