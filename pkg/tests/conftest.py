import pytest

from exrec.graph import build_graph, expertise_rank
from exrec.index import build_index
from exrec.synthetic import disagreement_community, planted_community

# Rows are written in exactly the attribute order/escaping the exporter uses,
# so dropping the wiki row gives the expected export byte for byte.
SIX_ROW_POSTS = """<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" AcceptedAnswerId="3" CreationDate="2009-02-18T10:00:00.000" Score="12" ViewCount="340" Body="&lt;p&gt;How do I reverse a list in place?&lt;/p&gt;&#xA;&lt;pre&gt;&lt;code&gt;xs = [1, 2]&lt;/code&gt;&lt;/pre&gt;" OwnerUserId="10" Title="Reverse a list &amp; keep memory flat" FavoriteCount="4" />
  <row Id="2" PostTypeId="1" CreationDate="2009-03-01T08:30:15.250" Score="3" ViewCount="88" Body="&lt;p&gt;Why does &quot;quoted&quot; text vanish?&lt;/p&gt;" OwnerUserId="11" Title="Quoting rules" FavoriteCount="0" />
  <row Id="3" PostTypeId="2" ParentId="1" CreationDate="2009-02-18T10:05:00.000" Score="20" Body="&lt;p&gt;Use slicing or the reverse method.&lt;/p&gt;" OwnerUserId="12" />
  <row Id="4" PostTypeId="2" ParentId="1" CreationDate="2009-02-19T11:00:00.000" Score="-1" Body="&lt;p&gt;Copy it&#x9;first.&lt;/p&gt;" />
  <row Id="5" PostTypeId="4" CreationDate="2009-02-20T00:00:00.000" Score="0" Body="&lt;p&gt;tag wiki&lt;/p&gt;" />
  <row Id="6" PostTypeId="2" ParentId="2" CreationDate="2009-03-02T09:00:00.000" Score="15" Body="&lt;p&gt;Escape the quotes.&lt;/p&gt;" OwnerUserId="12" />
</posts>
"""

SIX_ROW_USERS = """<?xml version="1.0" encoding="utf-8"?>
<users>
  <row Id="10" Reputation="101" DisplayName="asker one" />
  <row Id="11" Reputation="7" DisplayName="asker &quot;two&quot;" />
  <row Id="12" Reputation="5230" DisplayName="answerer" />
</users>
"""


@pytest.fixture
def six_row_dump(tmp_path):
    posts = tmp_path / "Posts.xml"
    users = tmp_path / "Users.xml"
    posts.write_text(SIX_ROW_POSTS, encoding="utf-8")
    users.write_text(SIX_ROW_USERS, encoding="utf-8")
    return posts, users


@pytest.fixture(scope="session")
def planted():
    c = planted_community()
    index = build_index(c.store)
    scores = expertise_rank(build_graph(c.store))
    return c, index, scores


@pytest.fixture(scope="session")
def disagreement():
    c = disagreement_community()
    index = build_index(c.store)
    scores = expertise_rank(build_graph(c.store))
    return c, index, scores


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
