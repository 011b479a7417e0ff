#!/usr/bin/env python3
"""Line-delimited JSON evaluator fixture with selectable behaviors.

Usage: toy_evaluator.py MODE [ARGS...]

Modes:
  echo                  log density 0.0 for every point
  neginf                the string "-inf" for every point
  conjugate-normal SIGMA TAU Y1,Y2,...   reference normal-normal model
  wrong-id              echoes id+1
  malformed             non-JSON response line
  short                 one fewer density than requested
  exit                  exits immediately
  sleep                 never answers
"""

import json
import math
import sys
import time


def main() -> None:
    mode = sys.argv[1]
    if mode == "exit":
        return
    for line in sys.stdin:
        req = json.loads(line)
        thetas = req["thetas"]
        if mode == "echo":
            values = [0.0 for _ in thetas]
        elif mode == "neginf":
            values = ["-inf" for _ in thetas]
        elif mode == "conjugate-normal":
            sigma, tau = float(sys.argv[2]), float(sys.argv[3])
            y = [float(v) for v in sys.argv[4].split(",")]
            n, ybar, ssq = len(y), sum(y) / len(y), sum(v * v for v in y)
            log2pi = math.log(2 * math.pi)
            values = []
            for point in thetas:
                mu = point[0]
                sse = ssq - 2 * n * ybar * mu + n * mu * mu
                loglik = -0.5 * n * (log2pi + 2 * math.log(sigma)) - sse / (2 * sigma**2)
                logprior = -0.5 * (log2pi + 2 * math.log(tau)) - mu * mu / (2 * tau**2)
                values.append(loglik + logprior)
        elif mode == "wrong-id":
            print(json.dumps({"id": req["id"] + 1, "log_densities": [0.0] * len(thetas)}),
                  flush=True)
            continue
        elif mode == "malformed":
            print("not json at all", flush=True)
            continue
        elif mode == "short":
            values = [0.0] * (len(thetas) - 1)
        elif mode == "sleep":
            time.sleep(3600)
            continue
        else:
            raise SystemExit(f"unknown mode {mode}")
        print(json.dumps({"id": req["id"], "log_densities": values}), flush=True)


if __name__ == "__main__":
    main()
