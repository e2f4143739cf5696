"""Unicode tokenization and per-language stopword lists.

Tokenization strips URLs and @-mentions, drops the # from hashtags (the tag
word itself is kept), casefolds, and splits on non-word characters. Keyword
search uses the raw token stream; wordcloud aggregation additionally removes
stopwords for the post's language.
"""

from __future__ import annotations

import re

__all__ = ["tokenize", "content_terms", "stopwords_for", "STOPWORDS"]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"\w+")

STOPWORDS: dict[str, frozenset[str]] = {
    "en": frozenset(
        """a about above after again all am an and any are as at be because been
        before being below between both but by could did do does doing down
        during each few for from further had has have having he her here hers
        him his how i if in into is it its itself just me more most my no nor
        not now of off on once only or other our ours out over own same she so
        some such than that the their theirs them then there these they this
        those through to too under until up very was we were what when where
        which while who whom why will with you your yours""".split()
    ),
    "fr": frozenset(
        """au aux avec ce ces dans de des du elle en et eux il ils je la le les
        leur lui ma mais me même mes moi mon ne nos notre nous on ou où par pas
        pour qu que qui sa se ses son sur ta te tes toi ton tu un une vos votre
        vous y est sont était étaient être avoir a ont plus""".split()
    ),
    "de": frozenset(
        """aber alle als also am an auch auf aus bei bin bis bist da damit das
        dass dein dem den der des die diese dir doch du durch ein eine einem
        einen einer es für hab habe haben hat hatte hier ich ihr im in ist ja
        kann mein mich mir mit nach nicht noch nur oder sein sich sie sind so
        über um und uns unser vom von vor war was wenn wer wie wir zu zum zur""".split()
    ),
    "es": frozenset(
        """a al algo como con de del desde donde el ella ellas ellos en entre
        era eres es esta estar este esto fue ha hay la las le les lo los más
        me mi mis muy nada ni no nos nosotros o os para pero por porque que
        qué se ser si sin sobre son su sus te tiene todo tu un una uno y ya""".split()
    ),
    "it": frozenset(
        """a ad al alla alle anche che chi ci come con da dai dal della delle
        di e è ed era gli ha hanno i il in io la le lei lo loro lui ma mi ne
        noi non o per più quella questo se si sono su sua suo tra tu un una
        uno voi""".split()
    ),
    "pt": frozenset(
        """a ao aos as às com da das de do dos e é em entre era foi há isso
        isto já mais mas me mesmo meu minha muito na nas não no nos nós o os
        ou para pela pelo por quando que quem se sem ser seu sua são também
        te tem um uma você""".split()
    ),
}


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens with URLs and @-mentions removed, # stripped.

    `#` is not a word character, so the tag text survives as a plain token
    once the symbol fails to match.
    """
    cleaned = _URL_RE.sub(" ", text)
    cleaned = _MENTION_RE.sub(" ", cleaned)
    return _TOKEN_RE.findall(cleaned.casefold())


def stopwords_for(language: str) -> frozenset[str]:
    return STOPWORDS.get(language, frozenset())


def content_terms(text: str, language: str) -> set[str]:
    """Distinct tokens minus the language's stopwords (wordcloud view)."""
    stop = stopwords_for(language)
    return {tok for tok in tokenize(text) if tok not in stop}
