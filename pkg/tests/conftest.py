import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from sgmrepair.corpus import PatchRecord


@pytest.fixture
def record():
    return PatchRecord(
        id="r1",
        buggy_only="return a ;",
        prev_code="int f(){ return a ; }",
        commit_msg="fix return",
        fixed_code="return b ;",
    )


@pytest.fixture
def method_record():
    return PatchRecord(
        id="m1",
        buggy_only="if ( i < n ) return i ;",
        prev_code="int find ( int n ) {\n  int i = 0 ;\n  if ( i < n ) return i ;\n  return -1 ;\n}",
        commit_msg="fix bound check",
        fixed_code="if ( i <= n ) return i ;",
    )


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        server = self.server
        server.requests.append({"body": body, "headers": dict(self.headers)})
        status, reply = server.responder(body)
        data = json.dumps(reply).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def mock_server():
    """Local JSON endpoint; set ``server.responder`` to ``body -> (status, reply)``."""
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    server.requests = []
    server.responder = lambda body: (200, {"completions": []})
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.url = f"http://127.0.0.1:{server.server_address[1]}/v1/complete"
    yield server
    server.shutdown()
    server.server_close()
