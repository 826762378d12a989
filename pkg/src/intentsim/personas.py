"""Deterministic persona text and initial shift generation for riders."""

from __future__ import annotations

import random

FIRST_NAMES = (
    "Chloe", "Ava", "Noah", "Liam", "Mia", "Ethan", "Sofia", "Lucas",
    "Ivy", "Mateo", "Nora", "Omar", "Priya", "Hana", "Diego", "Wei",
    "Lena", "Kofi", "Rosa", "Jun",
)

LAST_NAMES = (
    "Lewis", "Johnson", "Garcia", "Chen", "Patel", "Okafor", "Silva",
    "Kim", "Novak", "Haddad", "Moreau", "Tanaka",
)

TRAITS = (
    "with years of experience behind the wheel, always looking for ways to optimize time on the road",
    "who loves outdoor activities and wanted an active job",
    "who is saving up for school and counts every coin",
    "who knows every shortcut in town and takes pride in fast hand-offs",
    "who prefers calm streets and steady routines",
    "who is new to the job and eager to climb the daily rankings",
    "who treats the daily leaderboard as a personal competition",
    "who plans routes carefully and dislikes backtracking",
)


def make_persona(rider_id: int, rng: random.Random) -> str:
    """Render one rider description; consumes a fixed number of draws."""
    first = rng.choice(FIRST_NAMES)
    last = rng.choice(LAST_NAMES)
    age = rng.randint(19, 58)
    trait = rng.choice(TRAITS)
    return (
        f"You are {first} {last}, a {age}-year-old delivery rider {trait}."
    )


def draw_initial_shift(rng: random.Random) -> tuple[int, int]:
    """Starting work hours before any decision has been made."""
    start = rng.randint(7, 11)
    length = rng.randint(4, 9)
    return start, min(23, start + length)
