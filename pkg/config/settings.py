"""
Django settings for the riccati-rk project.

management command (python manage.py solve / compare / generate) 전용 프로젝트라
DB, 미들웨어, URL 설정은 없습니다.
솔버 설정은 환경 변수(.env 포함)에서 읽고, 테스트에서는 override_settings 로 바꿉니다.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return int(value)


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv("SECRET_KEY", "django-insecure-riccati-rk-local-only")

DEBUG = os.getenv("DEBUG", "False") == "True"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Local apps
    "apps.riccati",
]

DATABASES = {}


# Internationalization

LANGUAGE_CODE = "ko-kr"

TIME_ZONE = "Asia/Seoul"

USE_I18N = True

USE_TZ = True


# Riccati solver settings

# Worker threads (factorization prefetch, compare 모드의 choice 병렬 평가)
THREADS = max(1, _env_int("RICCATI_RK_THREADS", 1))

# X_j / dense residual oracle / --dense-verify 를 허용하는 최대 n
DENSE_CAP = _env_int("RICCATI_RK_DENSE_CAP", 500)

# solve_care_dense 가 받는 축소 문제의 최대 차수
DENSE_CARE_CAP = _env_int("RICCATI_RK_DENSE_CARE_CAP", 2000)

# heuristic shift 추정용 난수 seed
SEED = _env_int("RICCATI_RK_SEED", 0)

# Numerical thresholds
RANK_RTOL = 1e-12
HERMITIAN_RTOL = 1e-10
LTK_COND_MAX = 1e14
UW_COND_MAX = 1e12
U1_COND_MAX = 1e12
SHIFT_SINGULAR_RTOL = 1e-14


# Logging (django.setup() 이 dictConfig 로 적용)
LOG_LEVEL = os.getenv("RICCATI_RK_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = os.getenv(
    "RICCATI_RK_LOG_FORMAT", "%(asctime)s %(levelname)s %(name)s %(message)s"
)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "default": {"format": LOG_FORMAT},
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "default",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "apps": {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False},
    },
}
