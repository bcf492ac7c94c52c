import os

from hypothesis import settings

pytest_plugins = ("pytest_asyncio",)

# Property tests run longer on CI; HYPOTHESIS_PROFILE=ci selects it.
settings.register_profile("ci", max_examples=300, deadline=None)
settings.register_profile("dev", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))
