#!/usr/bin/env python3
"""Regenerates the bundled demo corpus under data/demo/.

The corpus imitates a construction-quoting workbook: four sheets (Scope of
Works, Below Grade, Products, Terms & Conditions), 120 rows of 70-200 terms
each, with deliberate near-duplicate rows inside Scope of Works. Row texts are
assembled from fixed per-sheet sentence cores plus per-row filler, so the
output is fully deterministic and the engine's behaviour on it is stable.

The generator self-checks the row properties the test suites rely on (term
counts per row, query-term counts for the calibration query "scope of work")
and fails loudly if an edit breaks them.
"""

import json
import os
import re

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "demo")
SOURCE_DOC = "demo_job.xlsx"

SCOPE = "Scope of Works"
BELOW = "Below Grade"
PRODUCTS = "Products"
TERMS = "Terms & Conditions"


def terms_of(text):
    """Mirror of the engine tokenizer for plain ASCII text."""
    out = []
    for raw in text.split():
        t = raw.strip("().,;:!?\"'[]").lower()
        if t:
            out.append(t)
    return out


def tf_scope_of_work(text):
    counts = {"scope": 0, "of": 0, "work": 0}
    for t in terms_of(text):
        if t in counts:
            counts[t] += 1
    return sum(counts.values()), counts


# ---------------------------------------------------------------------------
# Scope of Works: one primary row, twelve near-duplicates, one half-novel row.

SCOPE_PRIMARY = (
    "The scope of works under this contract covers the full scope of demolition "
    "excavation and structural preparation work across the nominated site. The "
    "principal scope includes saw cutting and breaking out existing concrete slabs, "
    "removal of redundant footings, grading and compaction of the disturbed "
    "platform, supply and placement of engineered fill, trimming batters, protection "
    "of retained services, establishment of temporary fencing hoarding and sediment "
    "controls, and daily cartage of demolition spoil to a licensed facility. All "
    "preparation work shall be coordinated with the waterproofing program so every "
    "tanked zone is available without rework or standing water before the membrane "
    "crews mobilise, and the builder keeps access tracks trafficable throughout."
)

# Each near-duplicate reuses the primary vocabulary with a short distinguishing
# clause, keeping its word set mostly inside the primary's.
SCOPE_DUP_BODY = (
    "The scope covers demolition excavation and structural preparation work across "
    "the nominated site including saw cutting and breaking out existing concrete "
    "slabs, removal of redundant footings, grading and compaction, placement of "
    "engineered fill, trimming batters, protection of retained services, temporary "
    "fencing hoarding and sediment controls, and daily cartage of demolition spoil "
    "to a licensed facility, coordinated so every tanked zone is available without "
    "rework or standing water before the membrane crews mobilise"
)

SCOPE_DUP_TAILS = [
    "for stage one girder bays",
    "for the northern wing frontage",
    "for the southern annexe podium",
    "for basement level one strip",
    "for the loading dock apron",
    "for the eastern carpark deck",
    "for the plantroom corridor run",
    "for lift pit number two",
    "for the western boundary strip",
    "for the entry ramp transition",
    "for the courtyard infill panel",
    "for the substation pad surrounds",
]

SCOPE_MID = (
    "The scope of site establishment work includes demolition hoarding fencing and "
    "sediment controls from the principal scope, plus a dedicated allowance for "
    "crew amenities sheds, lunchrooms, drying rooms, first aid posts, generator "
    "sets, lighting towers, wheel wash bays, flagged pedestrian detours, visitor "
    "induction kiosks, sign boards, dust monitors, noise loggers, vibration "
    "sensors, traffic marshals, spotters, permits, dilapidation surveys, and "
    "weekly tidy obligations the estimator prices separately per calendar month "
    "on the attached schedule pages."
)

# ---------------------------------------------------------------------------
# Below Grade: one anchor row, one long distinct row (drainage pits), and
# near-duplicates of the anchor with per-row filler.

BELOW_ANCHOR = (
    "Where basement walls retain ground the below grade work includes supply and "
    "installation of torch applied bituminous tanking membrane to blinding layers "
    "and retained faces, dressing the membrane into perimeter drainage cell, "
    "lapping and sealing penetrations, placing protection board before backfilling, "
    "and staged inspection of each concealed face prior to cover. Hydrostatic "
    "testing follows once the membrane has cured and the agricultural drain "
    "connected to stormwater is proven clear. Dewatering beyond nominated pump "
    "duty is excluded."
)

BELOW_LONG = (
    "Drainage pits and sumps below grade are excavated to invert levels shown, "
    "lined with geofabric, charged with screened aggregate, and fitted with "
    "slotted subsoil pipe laid at constant grade between pit centres. Pump wells "
    "receive duty and standby submersible pumps on guide rails, float switches, "
    "non return valves, gate valves, and rising mains terminating at the "
    "stormwater connection chamber. Control panels mount above flood level with "
    "high level alarms telemetered to the building management system. Concrete "
    "surrounds, cast iron covers, step irons, ladders, and fall arrest anchors "
    "complete each chamber. Commissioning includes drawdown tests, alarm "
    "simulations, and handover manuals with pump curves, electrical schematics, "
    "maintenance schedules, spare float switches, and warranty certificates "
    "collated for the services engineer, plus a camera survey proving every "
    "subsoil run is clean, straight, and free draining end to end."
)

BELOW_DUP_BODY = (
    "Below grade tanking includes torch applied bituminous membrane to blinding "
    "layers and retained faces, dressing into perimeter drainage cell, lapping and "
    "sealing penetrations, protection board before backfilling, staged inspection "
    "of each concealed face prior to cover, hydrostatic testing once cured, and "
    "the agricultural drain proven clear to stormwater"
)

BELOW_FILLERS = [
    "along grid line", "beneath the podium", "behind the core", "at the lift pit",
    "under the ramp", "beside the tank farm", "around the sump", "near the shaft",
    "after the piling", "before the capping beam", "against the shoring", "past the anchors",
]

# ---------------------------------------------------------------------------
# Products: one anchor row plus near-duplicates; several rows carry no
# calibration-query terms at all so the prior pool has members.

PRODUCTS_ANCHOR = (
    "Approved products schedule covers the primary waterproofing membrane, torch "
    "grade reinforced bitumen sheet, water based primer, two part polyurethane "
    "sealant, protection board, and drainage cell, each supported by current "
    "technical datasheets and a manufacturer warranty of ten years. Substitution "
    "of any listed product requires written approval supported by equivalence "
    "evidence before order placement. Batch numbers and delivery dockets are "
    "recorded against each pour zone in the register."
)

PRODUCTS_DUP_BODY = (
    "Products schedule lists the waterproofing membrane, reinforced bitumen sheet, "
    "water based primer, polyurethane sealant, protection board, and drainage "
    "cell, supported by technical datasheets and manufacturer warranty, with "
    "substitution requiring written approval and equivalence evidence before "
    "order placement, batch numbers and delivery dockets recorded in the register"
)

PRODUCTS_FILLERS = [
    "per level three", "per the podium deck", "per lift pit two", "per zone seven",
    "per the ramp slab", "per tower footings", "per the plant deck", "per stair core",
    "per the annexe", "per loading dock", "per retention tank", "per the crane base",
]

# ---------------------------------------------------------------------------
# Terms & Conditions: legal boilerplate written WITHOUT the calibration query
# terms (scope / of / work), so these rows stay invisible to variants that
# carry no structural priors. The negative section boost keeps them out of the
# full pipeline as well.

TERMS_SENTENCES = [
    "Progress claims must reach the superintendent before the twenty fifth day "
    "each calendar month and late claims roll into the following assessment "
    "period without interest or escalation relief.",
    "Retention equals five percent on each progress certificate until practical "
    "completion, then halves, with the balance released when the defects "
    "liability period expires twelve months later.",
    "The contractor maintains public liability insurance at twenty million "
    "dollars, contract insurance covering the full rebuild value, and workers "
    "compensation policies current at all times.",
    "Liquidated damages accrue at two thousand five hundred dollars per calendar "
    "day beyond the adjusted date for practical completion, capped at ten "
    "percent under the formal instrument.",
    "Variations require a written direction before pricing and the agreed rates "
    "in the schedule apply; unpriced directions are valued by the quantity "
    "surveyor whose determination binds both parties.",
    "Unfixed materials remain the supplier property until paid in full, and "
    "title passes only when each invoice clears, notwithstanding delivery to "
    "site or incorporation into the building.",
    "Any dispute first proceeds to senior executive negotiation, then mediation "
    "under the resolution institute rules, and only then arbitration seated "
    "locally with a single agreed arbitrator.",
    "The principal may access the site at all reasonable hours for inspections, "
    "provided directions are issued through the superintendent rather than "
    "trade supervisors on the floor.",
]

TERMS_FILLERS = [
    "clause governs subcontracts equally",
    "notice periods remain unchanged",
    "statutory rights stay preserved",
    "amendments need signed instruments",
    "headings carry no legal weight",
    "severance keeps remaining clauses",
    "waivers must be express",
    "time bars apply strictly",
    "electronic service is permitted",
    "business days exclude holidays",
    "governing law stays local",
    "survival clauses persist",
]


def pad_to(words, target, filler_pool, row_idx):
    """Append filler terms until the text reaches the target term count."""
    out = list(words)
    i = 0
    while len(out) < target:
        out.append(filler_pool[(row_idx * 7 + i) % len(filler_pool)])
        i += 1
    return out


def build_rows():
    rows = []

    def add(section, row_number, text):
        rows.append({
            "source_doc": SOURCE_DOC,
            "section_label": section,
            "row_number": row_number,
            "text": re.sub(r"\s+", " ", text).strip(),
        })

    # --- Scope of Works (14 rows) ---
    add(SCOPE, 0, SCOPE_PRIMARY)
    for i, tail in enumerate(SCOPE_DUP_TAILS):
        add(SCOPE, i + 1, SCOPE_DUP_BODY + " " + tail + ".")
    add(SCOPE, 13, SCOPE_MID)

    # --- Below Grade (35 rows) ---
    add(BELOW, 0, BELOW_ANCHOR)
    add(BELOW, 1, BELOW_LONG)
    pad_words = [
        "formwork", "reinforcement", "curing", "joints", "falls", "screeds",
        "upstands", "rebates", "chamfers", "nibs", "plinths", "kerbs",
        "setdowns", "hobbs", "caulking", "flashings", "cappings", "weepholes",
    ]
    for i in range(2, 35):
        body = BELOW_DUP_BODY + " " + BELOW_FILLERS[i % len(BELOW_FILLERS)]
        # Alternate query-term salt: none / one "work" / one extra "of".
        if i % 3 == 1:
            body += " covering remedial work items"
        elif i % 3 == 2:
            body += " inclusive of listed items"
        target = 90 + (i * 13) % 100  # 90..189 terms
        add(BELOW, i, " ".join(pad_to(terms_of(body), target, pad_words, i)))

    # --- Products (35 rows) ---
    add(PRODUCTS, 0, PRODUCTS_ANCHOR)
    prod_pad = [
        "cartridges", "rolls", "pails", "drums", "fasteners", "washers",
        "terminations", "angles", "fillets", "bandage", "detailing", "accessories",
        "adhesives", "cleaners", "reinforcing", "tapes", "membranes", "primers",
    ]
    for i in range(1, 35):
        body = PRODUCTS_DUP_BODY + " " + PRODUCTS_FILLERS[i % len(PRODUCTS_FILLERS)]
        # A third of the rows carry no query terms at all: prior-pool members.
        if i % 3 == 0:
            body = body.replace(" of ", " covering ")  # no-op safeguard; body has no "of"
        else:
            body += " inclusive of delivery"
        target = 70 + (i * 11) % 90  # 70..159 terms
        add(PRODUCTS, i, " ".join(pad_to(terms_of(body), target, prod_pad, i + 3)))

    # --- Terms & Conditions (36 rows) ---
    terms_pad = [
        "indemnities", "warranties", "certificates", "guarantees", "novation",
        "assignments", "audits", "registers", "notices", "schedules",
        "annexures", "appendices", "definitions", "recitals", "covenants",
        "conditions", "provisos", "stipulations",
    ]
    for i in range(36):
        body = TERMS_SENTENCES[i % len(TERMS_SENTENCES)] + " " + \
               TERMS_SENTENCES[(i + 3) % len(TERMS_SENTENCES)] + " " + \
               TERMS_FILLERS[i % len(TERMS_FILLERS)]
        target = 80 + (i * 17) % 120  # 80..199 terms
        add(TERMS, i, " ".join(pad_to(terms_of(body), target, terms_pad, i + 5)))

    return rows


def check(rows):
    assert len(rows) == 120, len(rows)
    by_section = {}
    for r in rows:
        by_section.setdefault(r["section_label"], []).append(r)
    assert len(by_section[SCOPE]) == 14
    assert len(by_section[BELOW]) == 35
    assert len(by_section[PRODUCTS]) == 35
    assert len(by_section[TERMS]) == 36

    for r in rows:
        n = len(terms_of(r["text"]))
        assert 70 <= n <= 200, (r["section_label"], r["row_number"], n)

    # Calibration-query structure for "scope of work".
    tf, c = tf_scope_of_work(by_section[SCOPE][0]["text"])
    assert tf >= 8 and c["scope"] >= 3, (tf, c)
    primary_tf = tf
    for r in by_section[SCOPE][1:13]:
        tf, _ = tf_scope_of_work(r["text"])
        assert 4 <= tf <= primary_tf - 3, (r["row_number"], tf)
    mid_tf, _ = tf_scope_of_work(by_section[SCOPE][13]["text"])
    assert 2 <= mid_tf <= 5, mid_tf

    for r in by_section[BELOW] + by_section[PRODUCTS]:
        tf, _ = tf_scope_of_work(r["text"])
        assert tf <= 3, (r["section_label"], r["row_number"], tf)

    n_zero_tf = sum(1 for r in by_section[BELOW] + by_section[PRODUCTS]
                    if tf_scope_of_work(r["text"])[0] == 0)
    assert n_zero_tf >= 5, n_zero_tf  # prior pool members

    for r in by_section[TERMS]:
        tf, _ = tf_scope_of_work(r["text"])
        assert tf == 0, (r["row_number"], tf, r["text"])
        words = set(terms_of(r["text"]))
        assert "waterproofing" not in words and "membrane" not in words

    # Warranty lives in Products (positive prior) and Terms (penalized).
    assert any("warranty" in terms_of(r["text"]) for r in by_section[PRODUCTS])


def main():
    rows = build_rows()
    check(rows)
    os.makedirs(OUT_DIR, exist_ok=True)
    with open(os.path.join(OUT_DIR, "rows.jsonl"), "w") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")
    print(f"wrote {len(rows)} rows to {os.path.join(OUT_DIR, 'rows.jsonl')}")


if __name__ == "__main__":
    main()
