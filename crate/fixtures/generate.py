"""Regenerates the CSV fixtures used by the test suites (deterministic seed)."""
import csv
import datetime
import math
import random

rng = random.Random(20201)


def weather():
    cities = {"New York": (16.0, 11.0, 4.8), "Seattle": (16.5, 7.0, 3.2)}
    kinds = ["drizzle", "rain", "sun", "snow", "fog"]
    start = datetime.date(2012, 1, 1)
    with open("weather.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["DATE", "LOCATION", "PRECIPITATION", "TEMP_MAX", "TEMP_MIN", "WIND", "WEATHER"])
        for city, (mean, amp, wind) in cities.items():
            for day in range(1461):
                d = start + datetime.timedelta(days=day)
                season = math.cos(2 * math.pi * (d.timetuple().tm_yday - 200) / 365.25)
                tmax = mean + amp * season + rng.gauss(0, 3)
                tmin = tmax - abs(rng.gauss(8, 2))
                precip = max(0.0, rng.gauss(-2, 6))
                kind = rng.choice(kinds) if precip > 0 else "sun"
                if kind == "snow" and tmin > 2:
                    kind = "rain"
                w.writerow([
                    d.isoformat(), city, f"{precip:.1f}", f"{tmax:.1f}", f"{tmin:.1f}",
                    f"{abs(rng.gauss(wind, 1.4)):.1f}", kind,
                ])


def iris():
    params = {
        "setosa": (5.0, 3.4, 1.5, 0.25),
        "versicolor": (5.9, 2.8, 4.3, 1.3),
        "virginica": (6.6, 3.0, 5.5, 2.0),
    }
    with open("iris.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sepal_length", "sepal_width", "petal_length", "petal_width", "species"])
        for species, means in params.items():
            for _ in range(50):
                vals = [max(0.1, rng.gauss(m, m * 0.08)) for m in means]
                w.writerow([f"{v:.1f}" for v in vals] + [species])


def graduate_programs():
    cities = ["Rio de Janeiro", "Niteroi", "Petropolis", "Campos dos Goytacazes", "Seropedica",
              "Nova Iguacu", "Volta Redonda", "Duque de Caxias", "Vassouras", "Macae"]
    status = ["Federal", "State", "Private", "Municipal"]
    fields = ["Engineering", "Health Sciences", "Humanities", "Exact Sciences",
              "Biological Sciences", "Social Sciences", "Agrarian Sciences", "Linguistics"]
    with open("graduate_programs.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["YEAR", "CITY", "JURIDICAL STATUS", "FIELD",
                    "QNT MASTERS", "QNT DOCTORAL", "QNT POSTDOCTORAL"])
        for _ in range(4993):
            year = rng.randint(1998, 2021)
            city = rng.choices(cities, weights=[40, 12, 6, 6, 6, 5, 5, 5, 3, 3])[0]
            w.writerow([
                year, city, rng.choice(status), rng.choice(fields),
                rng.randint(0, 320), rng.randint(0, 210), rng.randint(0, 60),
            ])


weather()
iris()
graduate_programs()
