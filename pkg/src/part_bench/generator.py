"""Seeded synthetic datasets: a LUBM-like university generator and a Wikidata-like random graph."""

import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from part_bench.config import DEFAULT_SEED, DEFAULT_UNIVERSITIES
from part_bench.errors import ConfigError
from part_bench.models import Term
from part_bench.query import RDF_TYPE
from part_bench.rdf_io import TermTriple, write_ntriples

logger = logging.getLogger(__name__)

UB = "http://swat.cse.lehigh.edu/onto/univ-bench.owl#"
WIKIDATA_ENTITY = "http://www.wikidata.org/entity/"

DEPARTMENTS_PER_UNIVERSITY = 6
FACULTY_RANKS = (("FullProfessor", 2), ("AssociateProfessor", 3), ("AssistantProfessor", 3))
UNDERGRADUATES_PER_DEPARTMENT = 30
GRADUATES_PER_DEPARTMENT = 10
RESEARCH_GROUPS_PER_DEPARTMENT = 2
COURSES_PER_FACULTY = 2
GRADUATE_COURSES_PER_FACULTY = 1
UNDERGRADUATE_ADVISOR_RATE = 0.2
CROSS_DEPARTMENT_ADVISOR_RATE = 0.03
OWN_UNIVERSITY_DEGREE_RATE = 0.4
HUB_PREDICATES = ("hasAlumnus", "member")

# Predicates of the random graph and their relative frequencies.
RANDOM_PREDICATES = (("P131s", 4), ("P961v", 2), ("P704s", 2), ("P39v", 3), ("P580q", 3), ("type", 3))
RANDOM_CLASSES = ("Q5", "Q515", "Q6256", "Q43229", "Q4830453")

_TYPE = Term.iri(RDF_TYPE)


def ub(name: str) -> Term:
    return Term.iri(UB + name)


def _literal(text: str) -> Term:
    return Term.literal(f'"{text}"')


@dataclass
class GeneratorSpec:
    """Size and seed of a synthetic university dataset; hub_fraction injects one high out-degree subject."""

    universities: int = DEFAULT_UNIVERSITIES
    seed: int = DEFAULT_SEED
    hub_fraction: float = 0.0

    def __post_init__(self):
        if self.universities < 1:
            raise ConfigError(f"universities must be at least 1, got {self.universities}")
        if not 0 <= self.hub_fraction < 1:
            raise ConfigError(f"hub_fraction must be in [0, 1), got {self.hub_fraction}")


def university_iri(index: int) -> str:
    return f"http://www.University{index}.edu"


_FacultyMember = tuple[Term, list[Term], list[Term]]


class _Department(NamedTuple):
    term: Term
    base: str
    domain: str
    university: int
    faculty: list[_FacultyMember]


class _UniversityBuilder:
    def __init__(self, spec: GeneratorSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.triples: list[TermTriple] = []
        self.people: list[Term] = []

    def add(self, s: Term, p: Term, o: Term) -> None:
        self.triples.append((s, p, o))

    def typed(self, entity: Term, *classes: str) -> None:
        for name in classes:
            self.add(entity, _TYPE, ub(name))

    def named(self, entity: Term, name: str, email_domain: str | None = None) -> None:
        self.add(entity, ub("name"), _literal(name))
        if email_domain:
            self.add(entity, ub("emailAddress"), _literal(f"{name}@{email_domain}"))

    def build(self) -> list[TermTriple]:
        departments = []
        for u in range(self.spec.universities):
            university = Term.iri(university_iri(u))
            self.typed(university, "University")
            self.named(university, f"University{u}")
            for d in range(DEPARTMENTS_PER_UNIVERSITY):
                departments.append(self.department(university, u, d))
        # Students come second so an advisor can be drawn from any department.
        for department in departments:
            self.students(department, departments)
        self.people.extend(member for department in departments for member, _, _ in department.faculty)
        if self.spec.hub_fraction > 0:
            self.hub()
        return self.triples

    def department(self, university: Term, u: int, d: int) -> _Department:
        domain = f"Department{d}.University{u}.edu"
        base = f"http://www.{domain}"
        department = Term.iri(base)
        self.typed(department, "Department")
        self.named(department, f"Department{d}")
        self.add(department, ub("subOrganizationOf"), university)

        for g in range(RESEARCH_GROUPS_PER_DEPARTMENT):
            group = Term.iri(f"{base}/ResearchGroup{g}")
            self.typed(group, "ResearchGroup")
            self.add(group, ub("subOrganizationOf"), department)

        faculty: list[_FacultyMember] = []
        course_count = graduate_course_count = 0
        for rank, count in FACULTY_RANKS:
            for j in range(count):
                member = Term.iri(f"{base}/{rank}{j}")
                self.typed(member, rank, "Faculty")
                if rank == "FullProfessor" and j == 0:
                    self.typed(member, "Chair")
                    self.add(member, ub("headOf"), department)
                self.add(member, ub("worksFor"), department)
                self.named(member, f"{rank}{j}", domain)
                doctoral = self.rng.randrange(self.spec.universities)
                self.add(member, ub("doctoralDegreeFrom"), Term.iri(university_iri(doctoral)))

                courses, graduate_courses = [], []
                for _ in range(COURSES_PER_FACULTY):
                    course = Term.iri(f"{base}/Course{course_count}")
                    self.typed(course, "Course")
                    self.named(course, f"Course{course_count}")
                    self.add(member, ub("teacherOf"), course)
                    courses.append(course)
                    course_count += 1
                for _ in range(GRADUATE_COURSES_PER_FACULTY):
                    course = Term.iri(f"{base}/GraduateCourse{graduate_course_count}")
                    self.typed(course, "GraduateCourse")
                    self.named(course, f"GraduateCourse{graduate_course_count}")
                    self.add(member, ub("teacherOf"), course)
                    graduate_courses.append(course)
                    graduate_course_count += 1
                faculty.append((member, courses, graduate_courses))
        return _Department(department, base, domain, u, faculty)

    def students(self, department: _Department, departments: list[_Department]) -> None:
        base, domain, faculty = department.base, department.domain, department.faculty
        all_courses = [c for _, courses, _ in faculty for c in courses]
        all_graduate_courses = [c for _, _, courses in faculty for c in courses]

        for j in range(UNDERGRADUATES_PER_DEPARTMENT):
            student = Term.iri(f"{base}/UndergraduateStudent{j}")
            self.typed(student, "UndergraduateStudent", "Student")
            self.add(student, ub("memberOf"), department.term)
            self.named(student, f"UndergraduateStudent{j}", domain)
            for course in self.rng.sample(all_courses, 2):
                self.add(student, ub("takesCourse"), course)
            if self.rng.random() < UNDERGRADUATE_ADVISOR_RATE:
                self.add(student, ub("advisor"), self.rng.choice(faculty)[0])
            self.people.append(student)

        for j in range(GRADUATES_PER_DEPARTMENT):
            student = Term.iri(f"{base}/GraduateStudent{j}")
            self.typed(student, "GraduateStudent", "Student")
            self.add(student, ub("memberOf"), department.term)
            self.named(student, f"GraduateStudent{j}", domain)
            if self.rng.random() < OWN_UNIVERSITY_DEGREE_RATE:
                degree = department.university
            else:
                degree = self.rng.randrange(self.spec.universities)
            self.add(student, ub("undergraduateDegreeFrom"), Term.iri(university_iri(degree)))
            advising = department
            if len(departments) > 1 and self.rng.random() < CROSS_DEPARTMENT_ADVISOR_RATE:
                advising = self.rng.choice([other for other in departments if other is not department])
            advisor, advisor_courses, _ = self.rng.choice(advising.faculty)
            self.add(student, ub("advisor"), advisor)
            self.add(student, ub("takesCourse"), self.rng.choice(advisor_courses))
            self.add(student, ub("takesCourse"), self.rng.choice(all_graduate_courses))
            self.people.append(student)

    def hub(self) -> None:
        """University0 gains hasAlumnus and member edges so its out-degree is about hub_fraction of all triples."""
        fraction = self.spec.hub_fraction
        wanted = math.ceil(fraction * len(self.triples) / (1 - fraction))
        candidates = [(predicate, person) for predicate in HUB_PREDICATES for person in self.people]
        if wanted > len(candidates):
            logger.warning("Hub capped at %d edges (requested %d)", len(candidates), wanted)
            wanted = len(candidates)
        hub = Term.iri(university_iri(0))
        for predicate, person in self.rng.sample(candidates, wanted):
            self.add(hub, ub(predicate), person)


def synthetic_triples(spec: GeneratorSpec) -> list[TermTriple]:
    """
    Build a LUBM-shaped dataset: universities, departments, faculty, courses and students.

    Every department has the same population, so the triple count grows linearly with the
    number of universities. A few graduate students are advised by faculty of another
    department. The output is fully determined by its seed and sizes.
    """
    triples = _UniversityBuilder(spec).build()
    logger.info("Generated %d triples for %d universities (seed=%d)", len(triples), spec.universities, spec.seed)
    return triples


def generate_synthetic(spec: GeneratorSpec, path: str | Path) -> int:
    """Write the synthetic university dataset as N-Triples and return the triple count."""
    return write_ntriples(synthetic_triples(spec), path)


def random_triples(num_triples: int, seed: int = DEFAULT_SEED) -> list[TermTriple]:
    """
    A Wikidata-flavoured random graph with entity-to-entity statements, qualifier literals and types.

    Subjects are skewed towards low entity numbers so some entities have many statements.
    """
    if num_triples < 0:
        raise ConfigError(f"num_triples must be non-negative, got {num_triples}")

    rng = random.Random(seed)
    entity_count = max(10, num_triples // 5)
    names = [name for name, _ in RANDOM_PREDICATES]
    weights = [weight for _, weight in RANDOM_PREDICATES]

    def entity(index: int) -> Term:
        return Term.iri(f"{WIKIDATA_ENTITY}Q{index}")

    triples = []
    for _ in range(num_triples):
        if rng.random() < 0.2:
            subject = entity(int(entity_count * rng.random() ** 2))
        else:
            subject = entity(rng.randrange(entity_count))
        name = rng.choices(names, weights)[0]
        if name == "type":
            triples.append((subject, _TYPE, Term.iri(WIKIDATA_ENTITY + rng.choice(RANDOM_CLASSES))))
        elif name == "P580q":
            year = rng.randrange(1800, 2020)
            literal = Term.literal(f'"{year}"^^<http://www.w3.org/2001/XMLSchema#gYear>')
            triples.append((subject, Term.iri(WIKIDATA_ENTITY + name), literal))
        else:
            triples.append((subject, Term.iri(WIKIDATA_ENTITY + name), entity(rng.randrange(entity_count))))
    return triples


def generate_random(num_triples: int, path: str | Path, seed: int = DEFAULT_SEED) -> int:
    return write_ntriples(random_triples(num_triples, seed), path)
