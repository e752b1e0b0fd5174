"""Themed word pools for the synthetic document generator.

Keys, values, and headers come from disjoint pools so both the text and
the geometry of a block carry signal about its role.
"""

FORM_KEYS = [
    "name", "date", "total", "invoice", "address", "phone", "email", "city",
    "state", "zip", "country", "company", "department", "title", "project",
    "number", "amount", "quantity", "status", "category", "reference", "account",
    "order", "customer", "vendor", "supplier", "contact", "manager", "owner",
    "signature", "approved", "due", "issued", "shipped", "received", "paid",
    "balance", "subtotal", "tax", "discount", "rate", "hours", "units", "code",
    "id", "type", "region", "branch", "period", "term",
]

FORM_VALUES = [
    "smith", "jones", "brown", "wilson", "taylor", "davis", "clark", "lewis",
    "walker", "young", "allen", "scott", "green", "baker", "adams", "nelson",
    "austin", "boston", "chicago", "dallas", "denver", "houston", "madison",
    "phoenix", "portland", "seattle", "omaha", "tulsa", "reno", "salem",
    "pending", "complete", "active", "closed", "open", "draft", "final",
    "approved", "rejected", "shipped", "north", "south", "east", "west",
    "alpha", "beta", "gamma", "delta", "acme", "globex", "initech", "umbrella",
]

NUMBERS = [str(n) for n in range(0, 100)] + [str(y) for y in range(2015, 2027)]

PRICES = [f"{d}.{c:02d}" for d in (1, 2, 3, 5, 7, 9, 12, 15, 19, 24) for c in (0, 25, 50, 75, 99)]

HEADERS = [
    "application", "registration", "summary", "report", "statement", "form",
    "agreement", "contract", "receipt", "details", "section", "overview",
]

MENU_ITEMS = [
    "coffee", "tea", "latte", "espresso", "juice", "water", "soda", "milk",
    "bagel", "muffin", "toast", "salad", "soup", "pasta", "pizza", "burger",
    "fries", "rice", "noodles", "curry", "cake", "pie", "cookie", "donut",
]

STORES = ["corner", "market", "cafe", "diner", "deli", "bakery", "kitchen", "grill"]

TABLE_HEADERS = ["item", "price", "qty", "sku", "month", "sales", "cost", "profit"]

ALL_WORDS = sorted(
    set(
        FORM_KEYS
        + FORM_VALUES
        + NUMBERS
        + PRICES
        + HEADERS
        + MENU_ITEMS
        + STORES
        + TABLE_HEADERS
    )
)
