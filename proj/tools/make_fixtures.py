#!/usr/bin/env python3
# Copyright 2026 The PushForge Authors
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
"""Regenerates the bundled fixture corpus and A/B log under data/fixtures/.

The output is deterministic; rerunning the script must not change the files.
"""

import json
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data", "fixtures")

SUBJECTS = [
    "a golden retriever learning to surf", "grandma's secret dumpling recipe",
    "a street musician in the rain", "the tiniest apartment in the city",
    "a marathon runner's last mile", "a cat that opens every door",
    "homemade pizza in ten minutes", "a mountain village at sunrise",
    "a toddler meeting snow for the first time", "a chess prodigy's comeback",
    "fixing a bike with one tool", "the night market's best noodles",
    "a rescued owl's first flight", "a magician's impossible card trick",
    "a family reunion after twenty years", "budget travel hacks for Tokyo",
    "a drummer playing on buckets", "a garden grown on a balcony",
    "a skateboarder's perfect landing", "a baker's croissant layers",
]
CLUSTERS = ["pets", "food", "travel", "sports", "music", "family"]
OPENERS = {  # latent click appeal of each opener
    "You won't believe": 0.45, "Everyone is talking about": 0.30, "Don't miss": 0.05,
    "Just in:": -0.10, "Here's why": 0.20, "Wait until you see": 0.40,
    "The secret behind": 0.35, "Finally revealed:": 0.25, "Check out": -0.25,
    "New video:": -0.40,
}
CLOSERS = {
    "tap to watch": 0.05, "see it now": 0.00, "watch before it's gone": 0.30,
    "the ending is wild": 0.40, "you'll want to share this": 0.20, "find out more": -0.15,
    "it only takes a minute": 0.10, "worth every second": 0.15, "more inside": -0.30,
}


def binomial(rng, n, p):
    # Normal approximation is enough for fixture data; clamp to [0, n].
    mean, sd = n * p, math.sqrt(max(n * p * (1 - p), 1e-9))
    return max(0, min(n, int(round(rng.gauss(mean, sd)))))


def corpus(rng):
    rows = []
    for i in range(240):
        subject = SUBJECTS[i % len(SUBJECTS)]
        cluster = CLUSTERS[i % len(CLUSTERS)]
        opener = rng.choice(list(OPENERS))
        closer = rng.choice(list(CLOSERS))
        pv = rng.choice([400, 700, 900, 1500, 2500, 5000, 12000])
        ctr = max(0.0, rng.gauss(0.012, 0.006))
        svr = min(0.9, max(0.0, rng.gauss(0.30, 0.08)))
        lvtr = min(1.0, max(0.0, rng.gauss(0.58, 0.08)))
        htr = max(0.0, rng.gauss(0.005, 0.003))
        rows.append({
            "video_id": "v%03d" % (i // 2),
            "push_id": "p%04d" % i,
            "text": "%s %s - %s" % (opener, subject, closer),
            "caption": None if i % 37 == 5 else
                       "A short video showing %s, filmed close up with natural sound." % subject,
            "original_title": subject.capitalize(),
            "topics": [cluster, subject.split()[-1]],
            "platform_category": cluster,
            "tag_cluster": cluster,
            "pv": pv,
            "clicks": int(round(ctr * pv)),
            "short_views": int(round(svr * pv)),
            "long_views": int(round(lvtr * pv)),
            "hates": int(round(htr * pv)),
            "source": ["human", "machine", "base"][i % 3],
            "timestamp": 1700000000 + 3600 * i,
        })
    return rows


def ab_log(rng):
    rows = []
    for v in range(60):
        subject = SUBJECTS[v % len(SUBJECTS)]
        base_ctr = rng.uniform(0.02, 0.05)
        arms = [("base", "New video: %s - more inside" % subject)]
        used = set()
        while len(arms) < 4:
            opener = rng.choice(list(OPENERS))
            closer = rng.choice(list(CLOSERS))
            if (opener, closer) in used or opener == "New video:":
                continue
            used.add((opener, closer))
            arms.append(("exp%d" % len(arms), "%s %s - %s" % (opener, subject, closer)))
        for arm_id, text in arms:
            opener = next(o for o in OPENERS if text.startswith(o))
            closer = next(c for c in CLOSERS if text.endswith(c))
            quality = OPENERS[opener] + CLOSERS[closer]
            ctr = min(0.5, base_ctr * math.exp(quality))
            pv = rng.randint(1800, 2200)
            rows.append({"video_id": "ab%03d" % v, "arm_id": arm_id, "text": text,
                         "pv": pv, "clicks": binomial(rng, pv, ctr)})
    return rows


def write_jsonl(name, rows):
    with open(os.path.join(OUT, name), "w", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    write_jsonl("corpus.jsonl", corpus(random.Random(20260101)))
    write_jsonl("ab_log.jsonl", ab_log(random.Random(20260102)))


if __name__ == "__main__":
    main()
