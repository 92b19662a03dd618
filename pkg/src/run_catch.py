#!/usr/bin/env python

import asyncio
import sys

import environ
import google.cloud.logging


if __name__ == "__main__":
    environ.Env.read_env()
    env = environ.Env()
    if env.bool("USE_CLOUD_LOGGING", default=False):
        client = google.cloud.logging.Client()
        client.setup_logging()

    from catch_subsampling.app import start
    try:
        sys.exit(asyncio.run(start(sys.argv[1:])))
    except KeyboardInterrupt:
        sys.exit(130)
