"""Snowball stemmer for Spanish.

Written against the published Snowball algorithm description; operates on
lowercase input (accented or not).
"""

VOWELS = frozenset("aeiouáéíóúü")
_UNACCENT = str.maketrans("áéíóú", "aeiou")

_PRONOUNS = ("selas", "selos", "sela", "selo", "las", "les", "los", "nos",
             "me", "se", "la", "le", "lo")
_PRONOUN_VERB = {"iéndo": "iendo", "ándo": "ando", "ár": "ar", "ér": "er",
                 "ír": "ir", "ando": None, "iendo": None, "ar": None,
                 "er": None, "ir": None, "yendo": None}

_STD_R2 = ("anza", "anzas", "ico", "ica", "icos", "icas", "ismo", "ismos",
           "able", "ables", "ible", "ibles", "ista", "istas", "oso", "osa",
           "osos", "osas", "amiento", "amientos", "imiento", "imientos")
# unaccented "acion"/"ucion" forms are accepted too, since input text is
# usually accent-folded before stemming
_STD_IC = ("adora", "ador", "ación", "acion", "adoras", "adores", "aciones",
           "ante", "antes", "ancia", "ancias")
_STD_LOG = ("logía", "logías")
_STD_U = ("ución", "ucion", "uciones")
_STD_ENTE = ("encia", "encias")
_STD_IDAD = ("idad", "idades")
_STD_IV = ("iva", "ivo", "ivas", "ivos")
_STD_ALL = (_STD_R2 + _STD_IC + _STD_LOG + _STD_U + _STD_ENTE + _STD_IDAD
            + _STD_IV + ("amente", "mente"))

_Y_VERB = ("ya", "ye", "yan", "yen", "yeron", "yendo", "yo", "yó", "yas",
           "yes", "yais", "yamos")
_VERB_GU = ("en", "es", "éis", "emos")
_VERB_DEL = (
    "arían", "arías", "arán", "arás", "aríais", "aría", "aréis", "aríamos",
    "aremos", "ará", "aré", "erían", "erías", "erán", "erás", "eríais", "ería",
    "eréis", "eríamos", "eremos", "erá", "eré", "irían", "irías", "irán",
    "irás", "iríais", "iría", "iréis", "iríamos", "iremos", "irá", "iré",
    "aba", "ada", "ida", "ía", "ara", "iera", "ad", "ed", "id", "ase", "iese",
    "aste", "iste", "an", "aban", "ían", "aran", "ieran", "asen", "iesen",
    "aron", "ieron", "ado", "ido", "ando", "iendo", "ió", "ar", "er", "ir",
    "as", "abas", "adas", "idas", "ías", "aras", "ieras", "ases", "ieses",
    "ís", "áis", "abais", "íais", "arais", "ierais", "aseis", "ieseis",
    "asteis", "isteis", "ados", "idos", "amos", "ábamos", "íamos", "imos",
    "áramos", "iéramos", "iésemos", "ásemos", "éamos",
)
_VERB_ALL = _VERB_GU + _VERB_DEL
_RESIDUAL = ("os", "a", "o", "á", "í", "ó", "e", "é")


def _longest(word, suffixes, start=0):
    """Longest suffix of ``word`` from ``suffixes`` lying at or after ``start``."""
    best = None
    for s in suffixes:
        if word.endswith(s) and len(word) - len(s) >= start:
            if best is None or len(s) > len(best):
                best = s
    return best


def _regions(word):
    n = len(word)

    def is_v(i):
        return word[i] in VOWELS

    def gopast(pred, i):
        while i < n:
            if pred(i):
                return i + 1
            i += 1
        return None

    rv = n
    if n >= 2:
        if is_v(0):
            if not is_v(1):
                pos = gopast(is_v, 2)
            else:
                pos = gopast(lambda i: not is_v(i), 2)
            if pos is not None:
                rv = pos
        else:
            if not is_v(1):
                pos = gopast(is_v, 2)
                if pos is not None:
                    rv = pos
            elif n >= 3:
                rv = 3
            else:
                rv = n

    def r_after(i):
        p = gopast(is_v, i)
        if p is None:
            return n
        p = gopast(lambda k: not is_v(k), p)
        return n if p is None else p

    r1 = r_after(0)
    r2 = r_after(r1)
    return rv, r1, r2


def _standard_suffix(word, r1, r2):
    """Returns the new word or None if the step did not apply."""
    suf = _longest(word, _STD_ALL)
    if suf is None:
        return None
    n = len(word)
    at = n - len(suf)
    if suf in _STD_R2:
        return word[:at] if at >= r2 else None
    if suf in _STD_IC:
        if at < r2:
            return None
        word = word[:at]
        if word.endswith("ic") and len(word) - 2 >= r2:
            word = word[:-2]
        return word
    if suf in _STD_LOG:
        return word[:at] + "log" if at >= r2 else None
    if suf in _STD_U:
        return word[:at] + "u" if at >= r2 else None
    if suf in _STD_ENTE:
        return word[:at] + "ente" if at >= r2 else None
    if suf == "amente":
        if at < r1:
            return None
        word = word[:at]
        pre = _longest(word, ("iv", "os", "ic", "ad"))
        if pre and len(word) - len(pre) >= r2:
            word = word[:-len(pre)]
            if pre == "iv" and word.endswith("at") and len(word) - 2 >= r2:
                word = word[:-2]
        return word
    if suf == "mente":
        if at < r2:
            return None
        word = word[:at]
        pre = _longest(word, ("ante", "able", "ible"))
        if pre and len(word) - len(pre) >= r2:
            word = word[:-len(pre)]
        return word
    if suf in _STD_IDAD:
        if at < r2:
            return None
        word = word[:at]
        pre = _longest(word, ("abil", "ic", "iv"))
        if pre and len(word) - len(pre) >= r2:
            word = word[:-len(pre)]
        return word
    # iva/ivo/ivas/ivos
    if at < r2:
        return None
    word = word[:at]
    if word.endswith("at") and len(word) - 2 >= r2:
        word = word[:-2]
    return word


def stem(word):
    """Stem one lowercase Spanish word."""
    if len(word) < 2:
        return word.translate(_UNACCENT)
    rv, r1, r2 = _regions(word)

    # attached pronoun
    pron = _longest(word, _PRONOUNS)
    if pron is not None:
        base = word[:-len(pron)]
        verb = _longest(base, _PRONOUN_VERB)
        if verb is not None and len(base) - len(verb) >= rv:
            if verb == "yendo":
                if base[:-len(verb)].endswith("u"):
                    word = base
            elif _PRONOUN_VERB[verb] is not None:
                word = base[:-len(verb)] + _PRONOUN_VERB[verb]
            else:
                word = base

    new = _standard_suffix(word, r1, r2)
    if new is not None:
        word = new
    else:
        suf = _longest(word, _Y_VERB, rv)
        if suf is not None and word[:-len(suf)].endswith("u"):
            word = word[:-len(suf)]
        else:
            suf = _longest(word, _VERB_ALL, rv)
            if suf is not None:
                word = word[:-len(suf)]
                if suf in _VERB_GU and word.endswith("gu"):
                    word = word[:-1]

    suf = _longest(word, _RESIDUAL)
    if suf is not None and len(word) - len(suf) >= rv:
        word = word[:-len(suf)]
        if suf in ("e", "é") and word.endswith("gu") and len(word) - 1 >= rv:
            word = word[:-1]

    return word.translate(_UNACCENT)
