#!/usr/bin/env python3
# Copyright 2026 The SnailTrail Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes golden_batch.st2, one frame laid out straight from the wire format.

The C++ codec is not involved; trace_model_test decodes this file and checks
the events listed in kGoldenEvents.
"""

import struct

NONE64 = 0xFFFFFFFFFFFFFFFF
NONE32 = 0xFFFFFFFF

EPOCH = 3
# (tag, nanos, worker, op, channel, seq, remote, records, extra)
EVENTS = [
    (7, 10, 1, 5, NONE64, 0, NONE32, 0, ("addr", [0, 2])),
    (8, 20, 1, NONE64, 2, 0, NONE32, 0, ("chan", 4, 5)),
    (1, 100, 1, 5, NONE64, 0, NONE32, 0, None),
    (4, 150, 1, NONE64, 2, 7, 0, 500, None),
    (2, 200, 1, 5, NONE64, 0, NONE32, 10, None),
    (5, 250, 1, NONE64, 1 << 63, 3, NONE32, 0, None),
    (9, 300, 1, NONE64, NONE64, 0, NONE32, 0, None),
]


def record(tag, nanos, worker, op, channel, seq, remote, records, extra):
    out = struct.pack("<BQIQQQIQ", tag, nanos, worker, op, channel, seq, remote, records)
    if extra and extra[0] == "addr":
        out += struct.pack("<B", len(extra[1])) + b"".join(struct.pack("<I", a) for a in extra[1])
    if extra and extra[0] == "chan":
        out += struct.pack("<QQ", extra[1], extra[2])
    return out


def main():
    payload = struct.pack("<QI", EPOCH, len(EVENTS)) + b"".join(record(*e) for e in EVENTS)
    with open("golden_batch.st2", "wb") as f:
        f.write(struct.pack("<I", len(payload)) + payload)


if __name__ == "__main__":
    main()
