import pytest

from entropydp.datagen import GeneratorConfig, generate_dataset

# Eight sample records in the published layout (slash dates, one 9-digit Medicare number).
SAMPLE_CSV = """\
id,Name,Email,DateOfBirth,MedicareNumber,DiagnosisCode,TreatmentType,Address,Phone
1,Allison Hill,donaldgarcia@example.net,1946/8/4,1043321821,Z71.3,Speech Therapy,"133 Anna Trail, Robinsonshire, SA, 1265",(03) 3511 6155
2,Renee Blair,dudleynicholas@example.net,1974/8/29,133898081,J45.9,Diabetes Education,"1 Donna Walkway, Traciebury, NSW, 2984",+61.7.2553.4192
3,Danielle Ford,veronica83@example.net,1978/11/23,8637940299,L40.0,Specialist Referral,"564 Jason Ring, Jasonfort, VIC, 2902",(03) 3884 9696
4,Zachary Taylor,ddavis@example.org,1955/7/24,4235116155,F33.2,Mental Health Counseling,"Flat 66 7 Maddox Alleyway, New Kaylamouth, NSW, 2926",08-0482-8148
5,Brittany Farmer,georgetracy@example.org,1984/2/28,4078161847,Z86.3,Mental Health Counseling,"391 Jessica Bridge, West Donna, NT, 2789",61-3-8346-5787
6,Danny Morgan,briannasmith@example.net,1942/10/9,5931034139,F41.1,Physiotherapy,"51a Joshua Plaza, West Jennifer, WA, 2697",61-3-1165-6670
7,Victoria Garcia,zchandler@example.org,1968/8/7,4752558499,Z86.3,Surgical Procedure,"7 Robert Formation, Wrightland, WA, 9108",1326 7736
8,Carmen Smith,ybaker@example.com,1973/7/31,9288276491,Z00.0,Chemotherapy,"Suite 343 980 Brown Riviera, Shawhaven, NT, 2281",02-9136-1939
"""


@pytest.fixture
def sample_csv(tmp_path):
    path = tmp_path / "sample.csv"
    path.write_text(SAMPLE_CSV, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def small_dataset():
    return generate_dataset(GeneratorConfig(n=1000, seed=1))


@pytest.fixture(scope="session")
def large_dataset():
    return generate_dataset(GeneratorConfig(n=131_000, seed=1))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
