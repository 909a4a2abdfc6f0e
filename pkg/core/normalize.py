"""
Normalización de texto a forma de Eventuality: minúsculas, cópulas a "be",
verbos lematizados, patrón sintáctico y posición del sujeto.

No hay parser de dependencias: las clases de token (s, v, be, o, a, p) salen
de lexicones en rules.json. Tanto el lematizador como el etiquetador aceptan
un hook externo.
"""
import re
from typing import Callable, List, Optional, Sequence

from core.rulebook import RuleBook, default_rulebook
from entities.eventuality import UNMATCHED, Eventuality
from entities.relations import PLACEHOLDERS

Tagger = Callable[[Sequence[str]], Sequence[Optional[str]]]

_CONTRACTIONS = [
    (re.compile(r"\bcan't\b"), "can not"),
    (re.compile(r"\bwon't\b"), "will not"),
    (re.compile(r"n't\b"), " not"),
    (re.compile(r"'m\b"), " am"),
    (re.compile(r"'re\b"), " are"),
    (re.compile(r"'ll\b"), " will"),
    (re.compile(r"'ve\b"), " have"),
    (re.compile(r"'d\b"), " would"),
    (re.compile(r"\b(he|she|it|that|there)'s\b"), r"\1 is"),
    (re.compile(r"(\w)'s\b"), r"\1 's"),
]
_PLACEHOLDER_RE = re.compile(r"\bperson([xyz])\b")
_PUNCT_RE = re.compile(r"[^\w'\s]")
_VOWELS = set("aeiou")
MAX_LEMMA_STEPS = 8


def tokenize(text: str) -> List[str]:
    text = text.strip().lower()
    for pattern, repl in _CONTRACTIONS:
        text = pattern.sub(repl, text)
    text = _PLACEHOLDER_RE.sub(lambda m: "Person" + m.group(1).upper(), text)
    text = _PUNCT_RE.sub(" ", text)
    return [tok for tok in text.split() if tok.strip("'")]


class Lemmatizer:
    """
    Tabla de irregulares + reglas de sufijo (-s, -es, -ies, -ing, -ed), aplicadas
    hasta punto fijo o como mucho MAX_LEMMA_STEPS veces (un hook no idempotente
    no cuelga el bucle).
    """

    def __init__(self, irregular: dict, hook: Optional[Callable[[str], str]] = None):
        self.irregular = irregular
        self.hook = hook

    def lemma(self, word: str) -> str:
        if word in PLACEHOLDERS:
            return word
        current = word
        for _ in range(MAX_LEMMA_STEPS):
            nxt = self._step(current)
            if nxt == current:
                break
            current = nxt
        return current

    def _step(self, word: str) -> str:
        if self.hook is not None:
            return self.hook(word)
        if word in self.irregular:
            return self.irregular[word]
        if len(word) > 4 and word.endswith("ies"):
            return word[:-3] + "y"
        if word.endswith(("sses", "xes", "ches", "shes", "zzes")):
            return word[:-2]
        if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) > 3:
            return word[:-1]
        if word.endswith("ing"):
            return self._fix_stem(word[:-3], word)
        if word.endswith("ed") and not word.endswith("eed"):
            if len(word) > 4 and word.endswith("ied"):
                return word[:-3] + "y"
            return self._fix_stem(word[:-2], word)
        return word

    @staticmethod
    def _fix_stem(stem: str, word: str) -> str:
        if len(stem) < 3 or not (_VOWELS & set(stem)):
            return word
        if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
            return stem[:-1]
        if stem[-1] in "cgvz":
            return stem + "e"
        if stem[-1] == "k" and stem[-2] in _VOWELS and stem[-3] not in _VOWELS:
            return stem + "e"
        return stem


class Normalizer:
    def __init__(self, rules: Optional[RuleBook] = None, tagger: Optional[Tagger] = None,
                 lemma_hook: Optional[Callable[[str], str]] = None):
        self.rules = rules or default_rulebook()
        self.tagger = tagger
        self.lemmatizer = Lemmatizer(self.rules.irregular_verbs, lemma_hook)
        self._subjects = self.rules.subject_lexicon | frozenset(PLACEHOLDERS)
        self._objects = self.rules.pronoun_forms | self.rules.subject_nouns | frozenset(PLACEHOLDERS)

    def normalize(self, text: str) -> Eventuality:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError(f"nothing to normalize in {text!r}")
        tokens = ["be" if t in self.rules.copulas else t for t in tokens]
        subject = next((i for i, t in enumerate(tokens) if t in self._subjects), None)
        if subject is None:
            return Eventuality(tuple(tokens), UNMATCHED, None)
        if self.tagger is not None:
            classes = list(self.tagger(tokens))
        else:
            classes = self._classify(tokens, subject)
        tokens = [self.verb_form(t) if c == "v" else t for t, c in zip(tokens, classes)]
        return Eventuality(tuple(tokens), self.match_pattern(classes), subject)

    def verb_form(self, token: str) -> str:
        # un lema que cae en function_words cambiaría de clase al renormalizar
        lemma = self.lemmatizer.lemma(token)
        return token if lemma in self.rules.function_words else lemma

    def is_adjective(self, token: str, after_copula: bool) -> bool:
        if token in self.rules.adjectives:
            return True
        if not after_copula:
            return False
        return any(token.endswith(s) and len(token) > len(s) + 2 for s in self.rules.adjective_suffixes)

    def _classify(self, tokens: List[str], subject: int) -> List[Optional[str]]:
        rules = self.rules
        classes: List[Optional[str]] = [None] * len(tokens)
        for i in range(subject):
            # contenido antes del sujeto rompe el patrón
            if tokens[i] not in rules.function_words:
                classes[i] = "x"
        classes[subject] = "s"
        have_verb = False
        expect_verb = False
        prev: Optional[str] = None
        for i in range(subject + 1, len(tokens)):
            tok = tokens[i]
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if tok == "be":
                cls = "be"
                have_verb = True
                expect_verb = False
            elif tok in rules.function_words:
                cls = None
            elif tok == "to" and prev in ("v", "be") and nxt is not None and (
                    nxt == "be" or self.lemmatizer.lemma(nxt) in rules.verbs):
                cls = None
                expect_verb = True
            elif expect_verb or not have_verb:
                cls = "v"
                have_verb = True
                expect_verb = False
            elif tok in rules.prepositions:
                cls = "p"
            elif tok in self._objects:
                cls = "o"
            elif prev in ("v", "be") and self.is_adjective(tok, after_copula=(prev == "be")):
                cls = "a"
            elif prev == "v" and self.lemmatizer.lemma(tok) in rules.verbs:
                cls = "v"
            else:
                cls = "o"
            classes[i] = cls
            if cls is not None:
                prev = cls
        return classes

    def match_pattern(self, classes: Sequence[Optional[str]]) -> str:
        seq = [c for c in classes if c is not None]
        for spec in self.rules.patterns:
            if len(spec.template) != len(seq):
                continue
            if all(_slot_matches(want, got) for want, got in zip(spec.template, seq)):
                return spec.code
        return UNMATCHED


def _slot_matches(want: str, got: str) -> bool:
    if want == "v":
        return got in ("v", "be")
    return want == got


_default: Optional[Normalizer] = None


def default_normalizer() -> Normalizer:
    global _default
    if _default is None:
        _default = Normalizer()
    return _default


def normalize(text: str, normalizer: Optional[Normalizer] = None) -> Eventuality:
    return (normalizer or default_normalizer()).normalize(text)
