# bkjump/constants.py

# Operator table: name -> (priority, type). Fixed; no op/3 directive.
INFIX_OPERATORS = {
    ':-': (1200, 'xfx'),
    ';': (1100, 'xfy'),
    '->': (1050, 'xfy'),
    ',': (1000, 'xfy'),
    '=': (700, 'xfx'),
    'is': (700, 'xfx'),
    '>': (700, 'xfx'),
    '<': (700, 'xfx'),
    '>=': (700, 'xfx'),
    '=<': (700, 'xfx'),
    '+': (500, 'yfx'),
    '-': (500, 'yfx'),
    '*': (400, 'yfx'),
    '/': (400, 'yfx'),
    '//': (400, 'yfx'),
}
PREFIX_NECK = ':-'  # only as directive prefix
MAX_PRIORITY = 1200
ARG_PRIORITY = 999

SYMBOL_CHARS = set('+-*/\\^<>=~:.?@#&$')
SOLO_CHARS = set('!;')

# Atoms with special meaning
NIL = '[]'
LIST_FUNCTOR = '.'
PAIR_FUNCTOR = '-'
CONJUNCTION = ','
DISJUNCTION = ';'
IF_THEN = '->'
TRUE = 'true'
FAIL = 'fail'

# Reserved names
NODE_FUNCTOR = '$node'  # '$node'(N): native backjump target identifier
BTID_FUNCTOR = '$bj'  # '$bj'(N, Args): identifier produced by btid/2
MY_ID_MARKER = '$my_id'
CATCH_REST_MARKER = '$catch_rest'
FRESH_ID = 'fresh'  # '$catch_rest'(fresh) asks for a btid/2 identifier
RESERVED_MARKERS = frozenset({(MY_ID_MARKER, 1), (CATCH_REST_MARKER, 1)})

# Control constructs handled by the engine itself
CONTROL_CONSTRUCTS = frozenset({
    (CONJUNCTION, 2), (DISJUNCTION, 2), (IF_THEN, 2),
})
# Built-in predicates (control constructs excluded); backjump primitives
# are only available in native_backjump mode.
BUILTIN_PREDICATES = frozenset({
    ('true', 0), ('fail', 0), ('=', 2), ('var', 1), ('nonvar', 1), ('is', 2),
    ('>', 2), ('<', 2), ('>=', 2), ('=<', 2), ('btid', 2), ('sort_desc', 2),
    ('catch', 3), ('throw', 1),
})
NATIVE_BACKJUMP_PREDICATES = frozenset({('parent_choice', 1), ('backjump', 1)})
RESERVED_INDICATORS = (
    CONTROL_CONSTRUCTS | BUILTIN_PREDICATES | NATIVE_BACKJUMP_PREDICATES | RESERVED_MARKERS
)

# Default values
DEFAULT_MAX_STEPS = 10_000_000
DEFAULT_DEPTH_CAP = 10_000
ORACLE_MAX_VARS = 26

# Trace file format
TRACE_HEADER = "ldtrace 1"
TRACE_EMPTY_FIELD = "-"

# Bench defaults (near the 3-SAT phase transition)
BENCH_DEFAULT_VARS = 20
BENCH_DEFAULT_CLAUSES = 85
BENCH_DEFAULT_CLAUSE_LEN = 3
BENCH_CSV_HEADER = ("instance", "program", "sat", "clause_tries", "backjumps", "steps", "micros")

# CLI exit codes
EXIT_OK = 0
EXIT_NO_ANSWERS = 1
EXIT_ERROR = 2
EXIT_ORACLE_DISAGREEMENT = 3
