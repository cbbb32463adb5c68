"""Entry point for ``python -m palstream.service``."""

from __future__ import annotations

import argparse

import uvicorn


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="palstream.service", description="Serve the palstream HTTP API."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8321)
    args = parser.parse_args(argv)
    uvicorn.run("palstream.service.app:app", host=args.host, port=args.port)


if __name__ == "__main__":
    main()
