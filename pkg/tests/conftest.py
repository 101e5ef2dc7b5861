import pytest

from fqkit.corpus import Conversation, Turn
from fqkit.entity import NameLexicon, build_catalog


@pytest.fixture
def godel_conversation() -> Conversation:
    """Five turns: four dialog-history turns plus the follow-up turn."""
    return Conversation(
        conversation_id="godel",
        topic="Kurt Gödel",
        turns=[
            Turn(
                "Where was he born?",
                "Where was Kurt Gödel born?",
                "Brunn, Austria-Hungary",
            ),
            Turn("When was he born?", "When was Kurt Gödel born?", "April 28, 1906"),
            Turn(
                "What was his home life like?",
                "What was Kurt Gödel's home life like?",
                "ethnic German family",
            ),
            Turn(
                "Where did he go to school?",
                "Where did Kurt Gödel go to school?",
                "Godel attended the Evangelische Volksschule in Brunn",
            ),
            Turn(
                "What were his interests?",
                "What were Kurt Gödel's interests?",
                "mathematics and logic",
            ),
        ],
    )


@pytest.fixture
def ronaldo_conversation() -> Conversation:
    return Conversation(
        conversation_id="ronaldo",
        topic="Cristiano Ronaldo",
        turns=[
            Turn(
                "When did he join Juventus?",
                "When did Cristiano Ronaldo join Juventus?",
                "July 2018",
            ),
        ],
    )


@pytest.fixture
def person_catalog():
    catalog, warnings = build_catalog(
        [("Kurt Gödel", "PERSON"), ("Cristiano Ronaldo", "PERSON")]
    )
    assert not warnings
    return catalog


@pytest.fixture
def tiny_lexicon() -> NameLexicon:
    return NameLexicon(first_names=("John", "Mary"), last_names=("Houston", "Smith"))
