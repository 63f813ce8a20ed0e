"""
Shared fixtures: a tiny abstract corpus, journal tables and small graphs
"""
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from config import settings
from services.graph import build_graph


SEPARATOR = "-" * 78

# Six records: five with authors, one anonymous (9201005)
CORPUS = f"""{SEPARATOR}
\\\\
Paper: hep-th/9201001
From: Alice Smith <alice@example.org>
Date: Wed, 1 Jan 1992 10:00:00 GMT   (12kb)
Title: Strings on tori and their dualities
Authors: Alice Smith (Princeton), Bob Jones and Carol White
Journal-ref: Phys.Rev. D45 (1992) 1234
\\\\
  We study closed strings compactified on tori and the duality group
  acting on their moduli space.
\\\\
{SEPARATOR}
\\\\
Paper: hep-th/9201002
From: Dave Brown <dave@example.org>
Date: Thu, 2 Jan 1992 11:00:00 GMT   (8kb)
Title: Anomalies in chiral gauge theories
Authors: Alice Smith and Dave Brown
Journal-ref: Nucl.Phys. B300 (1992) 1
\\\\
  Gauge anomalies of chiral fermions are computed with heat kernel methods.
\\\\
{SEPARATOR}
\\\\
Paper: hep-th/9201003
From: Eve Black <eve@example.org>
Date: Fri, 3 Jan 1992 09:30:00 GMT   (20kb)
Title: Black hole entropy from strings
Authors: Bob Jones, Eve Black
Journal-ref: Phys.Rev. D46 (1992) 77
\\\\
  Black hole entropy is counted from string microstates near extremality.
\\\\
{SEPARATOR}
\\\\
Paper: hep-th/9201004
From: Frank Green <frank@example.org>
Date: Sat, 4 Jan 1992 08:00:00 GMT   (5kb)
Title: Instantons in two dimensions
Authors: Frank Green
Journal-ref: Phys.Lett. B200 (1992) 300
\\\\
  Instanton solutions of two dimensional sigma models are classified.
\\\\
{SEPARATOR}
\\\\
Paper: hep-th/9201005
From: unknown
Date: Sun, 5 Jan 1992 08:00:00 GMT   (3kb)
Title: An anonymous note on conformal blocks
\\\\
  Conformal blocks of minimal models are revisited without attribution.
\\\\
{SEPARATOR}
\\\\
Paper: hep-th/9201006
From: Gina Gray <gina@example.org>
Date: Mon, 6 Jan 1992 12:00:00 GMT   (9kb)
Title: Entropy of string networks
Authors: Carol White & Eve Black & Gina Gray
\\\\
  Networks of strings carry entropy that scales with the string tension.
\\\\
"""

# citing cited; 9201005 is anonymous and 9209999 unknown, so two edges are dropped
CITATIONS = """# citing cited
9201002 9201001
9201003 9201001
9201006 9201003
9201005 9201001
9209999 9201001
"""

LOOKUP = """# journal prefix -> ISSN
phys.rev. d\t0556-2821
nucl.phys. b\t0550-3213
phys.lett. b\t0370-2693
"""

METRICS_CSV = """issn,quartile,h_index,impact_factor
0556-2821,Q1,200,4.5
0550-3213,Q1,250,3.1
0370-2693,Q2,180,2.2
"""

AUTHORS = ["alice smith", "bob jones", "carol white", "dave brown", "eve black", "frank green", "gina gray"]


@pytest.fixture(autouse=True)
def quiet_settings(monkeypatch):
    monkeypatch.setattr(settings, "SHOW_PROGRESS", False)
    monkeypatch.setattr(settings, "COAUTHORNET_CACHE", None)


@pytest.fixture
def corpus_file(tmp_path) -> Path:
    path = tmp_path / "abs" / "1992.abs"
    path.parent.mkdir()
    path.write_text(CORPUS, encoding="utf-8")
    return path


@pytest.fixture
def edges_file(tmp_path) -> Path:
    path = tmp_path / "cit-HepTh.txt"
    path.write_text(CITATIONS, encoding="utf-8")
    return path


@pytest.fixture
def lookup_file(tmp_path) -> Path:
    path = tmp_path / "lookup.tsv"
    path.write_text(LOOKUP, encoding="utf-8")
    return path


@pytest.fixture
def metrics_file(tmp_path) -> Path:
    path = tmp_path / "metrics.csv"
    path.write_text(METRICS_CSV, encoding="utf-8")
    return path


@pytest.fixture
def metrics_server():
    """Local HTTP server publishing METRICS_CSV at /metrics.csv"""

    class Handler(BaseHTTPRequestHandler):
        def do_GET(self):
            if self.path != "/metrics.csv":
                self.send_error(404)
                return
            body = METRICS_CSV.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/csv")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


@pytest.fixture
def walk_graph():
    """5 nodes; node 1's neighbors are 0 (shared with 2), 2 and 3"""
    return build_graph([(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)], 5, directed=False)


@pytest.fixture
def small_graph():
    """8-node undirected graph with one isolated node (7)"""
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 3), (1, 5)]
    return build_graph(edges, 8, directed=False)


@pytest.fixture
def ring_graph():
    """60 nodes, each joined to its 10 successors around a ring: 600 edges"""
    edges = [(i, (i + k) % 60) for i in range(60) for k in range(1, 11)]
    return build_graph(edges, 60, directed=False)


@pytest.fixture
def barbell_graph():
    """Two 10-cliques joined by one edge (9 - 10)"""
    size = 10
    edges = []
    for base in (0, size):
        edges.extend((base + i, base + j) for i in range(size) for j in range(i + 1, size))
    edges.append((size - 1, size))
    return build_graph(edges, 2 * size, directed=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
