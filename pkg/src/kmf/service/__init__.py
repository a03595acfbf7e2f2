"""Content-addressed knowledge-base store and its HTTP API."""

from .api import LISTEN_ENV, Response, Service, make_server, parse_listen, serve
from .store import PARTS, Store, sha256_hex

__all__ = ["LISTEN_ENV", "PARTS", "Response", "Service", "Store", "make_server", "parse_listen", "serve", "sha256_hex"]
